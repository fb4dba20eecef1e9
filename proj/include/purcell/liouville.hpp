#ifndef PURCELL_LIOUVILLE_HPP
#define PURCELL_LIOUVILLE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qed.hpp"

namespace purcell {

using Cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Fock-space truncation. Large enough for the weak and moderately saturated
// drives this model is used at; steady_state refuses to report results when
// population piles up in the top level.
struct HilbertSpec {
    int n_fock = 5;

    void validate() const {
        if (n_fock < 2)
            throw std::invalid_argument("HilbertSpec: n_fock must be >= 2");
    }
    int dim() const { return 2 * n_fock; }
};

struct truncation_error : std::runtime_error {
    double top_population;
    int n_fock;
    truncation_error(double pop, int nf)
        : std::runtime_error("steady_state: top Fock level holds population " +
                             std::to_string(pop) + " at n_fock = " + std::to_string(nf) +
                             "; rebuild the model with a larger n_fock"),
          top_population(pop), n_fock(nf) {}
};

namespace detail {

inline CMatrix kron(const CMatrix& A, const CMatrix& B) {
    CMatrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

inline CMatrix annihilator(int n_fock) {
    CMatrix a = CMatrix::Zero(n_fock, n_fock);
    for (int n = 1; n < n_fock; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

} // namespace detail

// Density matrix on |atom> (x) |fock>; atom index 0 is ground, 1 is excited,
// composite index = atom * n_fock + fock.
struct CompositeState {
    HilbertSpec spec;
    CMatrix rho;

    static CompositeState pure(const HilbertSpec& spec, int atom, int fock) {
        spec.validate();
        if (atom < 0 || atom > 1)
            throw std::invalid_argument("CompositeState: atom level must be 0 or 1");
        if (fock < 0 || fock >= spec.n_fock)
            throw std::invalid_argument("CompositeState: fock level out of range");
        CompositeState s{spec, CMatrix::Zero(spec.dim(), spec.dim())};
        int idx = atom * spec.n_fock + fock;
        s.rho(idx, idx) = 1.0;
        return s;
    }

    // hermiticity and unit trace to 1e-10; eigenvalues may dip slightly
    // negative from roundoff or integration error, bounded by pos_tol
    void validate(double pos_tol = 1e-9) const {
        spec.validate();
        if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
            throw std::invalid_argument("CompositeState: dimension mismatch");
        double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        if (herm > 1e-10)
            throw std::invalid_argument("CompositeState: not Hermitian (deviation " +
                                        std::to_string(herm) + ")");
        double tr_err = std::abs(rho.trace() - Cplx(1.0, 0.0));
        if (tr_err > 1e-10)
            throw std::invalid_argument("CompositeState: trace deviates from 1 by " +
                                        std::to_string(tr_err));
        Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
        double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -pos_tol)
            throw std::invalid_argument("CompositeState: negative eigenvalue " +
                                        std::to_string(min_eig));
    }

    double atom_excited_population() const {
        double p = 0.0;
        for (int n = 0; n < spec.n_fock; ++n)
            p += rho(spec.n_fock + n, spec.n_fock + n).real();
        return p;
    }

    double fock_population(int n) const {
        return rho(n, n).real() + rho(spec.n_fock + n, spec.n_fock + n).real();
    }

    double top_fock_population() const { return fock_population(spec.n_fock - 1); }

    double mean_photon_number() const {
        double v = 0.0;
        for (int n = 1; n < spec.n_fock; ++n)
            v += n * fock_population(n);
        return v;
    }
};

// Hamiltonian in the drive frame plus the two decay channels: atomic dipole
// emission into free space at 2*gamma and cavity leakage at 2*kappa.
struct LindbladModel {
    SystemParams params;
    HilbertSpec spec;
    CMatrix hamiltonian;
    std::vector<CMatrix> jumps; // exactly two: {atom decay, cavity leak}
    CMatrix photon_number;      // I (x) a^dag a, cached for rate evaluations

    void validate() const {
        params.validate();
        spec.validate();
        if (hamiltonian.rows() != spec.dim() || hamiltonian.cols() != spec.dim())
            throw std::invalid_argument("LindbladModel: Hamiltonian dimension mismatch");
        if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("LindbladModel: Hamiltonian is not Hermitian");
        if (jumps.size() != 2)
            throw std::invalid_argument("LindbladModel: expected exactly two jump operators");
    }
};

inline LindbladModel build_model(const SystemParams& p, const HilbertSpec& spec) {
    p.validate();
    spec.validate();
    const int nf = spec.n_fock;
    CMatrix a = detail::annihilator(nf);
    CMatrix ic = CMatrix::Identity(nf, nf);
    CMatrix i2 = CMatrix::Identity(2, 2);
    CMatrix sm = CMatrix::Zero(2, 2); // |g><e|
    sm(0, 1) = 1.0;
    CMatrix sp = sm.adjoint();

    LindbladModel m;
    m.params = p;
    m.spec = spec;
    m.hamiltonian = -p.delta_a * detail::kron(sp * sm, ic)
                  - p.delta_c * detail::kron(i2, a.adjoint() * a)
                  + p.g * (detail::kron(sp, a) + detail::kron(sm, a.adjoint()))
                  + 0.5 * p.omega * (detail::kron(sp, ic) + detail::kron(sm, ic));
    m.jumps = {std::sqrt(2.0 * p.gamma) * detail::kron(sm, ic),
               std::sqrt(2.0 * p.kappa) * detail::kron(i2, a)};
    m.photon_number = detail::kron(i2, a.adjoint() * a);
    m.validate();
    return m;
}

// Superoperator as a d^2 x d^2 matrix acting on column-stacked rho:
// vec(A rho B) = (B^T (x) A) vec(rho).
inline CMatrix liouvillian_matrix(const LindbladModel& m) {
    const Eigen::Index d = m.hamiltonian.rows();
    CMatrix id = CMatrix::Identity(d, d);
    CMatrix L = Cplx(0, -1) * (detail::kron(id, m.hamiltonian) -
                               detail::kron(m.hamiltonian.transpose(), id));
    for (const CMatrix& j : m.jumps) {
        CMatrix jdj = j.adjoint() * j;
        L += detail::kron(j.conjugate(), j);
        L -= 0.5 * detail::kron(id, jdj);
        L += Cplx(-0.5, 0) * detail::kron(jdj.transpose(), id);
    }
    return L;
}

inline CMatrix apply_liouvillian(const LindbladModel& m, const CMatrix& rho) {
    CMatrix out = Cplx(0, -1) * (m.hamiltonian * rho - rho * m.hamiltonian);
    for (const CMatrix& j : m.jumps) {
        CMatrix jdj = j.adjoint() * j;
        out += j * rho * j.adjoint();
        out -= 0.5 * (jdj * rho + rho * jdj);
    }
    return out;
}

// Steady state by replacing one row of the singular Liouvillian with the
// trace constraint. Dense LU; the composite space stays small (d <= 40).
inline CompositeState steady_state(const LindbladModel& m) {
    m.validate();
    const Eigen::Index d = m.hamiltonian.rows();
    CMatrix L = liouvillian_matrix(m);
    const double l_norm = L.norm();

    Eigen::RowVectorXcd row0 = L.row(0);
    L.row(0).setZero();
    for (Eigen::Index j = 0; j < d; ++j)
        L(0, j * d + j) = 1.0; // trace row
    CVector b = CVector::Zero(d * d);
    b[0] = 1.0;

    Eigen::PartialPivLU<CMatrix> lu(L);
    double rcond = lu.rcond();
    if (!(rcond > 1e-14))
        throw std::runtime_error("steady_state: Liouvillian solve is ill-conditioned (rcond " +
                                 std::to_string(rcond) + ")");
    CVector v = lu.solve(b);

    // residual against the true Liouvillian (restore the replaced row)
    CVector res = L * v - b;
    res[0] = (row0 * v)(0);
    if (res.norm() > 1e-8 * l_norm)
        throw std::runtime_error("steady_state: residual exceeds tolerance");

    CompositeState s{m.spec, Eigen::Map<CMatrix>(v.data(), d, d)};
    s.rho = 0.5 * (s.rho + s.rho.adjoint()).eval();
    s.validate(1e-9);
    double top = s.top_fock_population();
    if (top > 1e-6)
        throw truncation_error(top, m.spec.n_fock);
    return s;
}

// Doubles n_fock from the requested starting point until the truncation check
// passes, never exceeding 20 levels.
inline std::pair<LindbladModel, CompositeState> steady_state_adaptive(const SystemParams& p,
                                                                      HilbertSpec spec) {
    spec.validate();
    int nf = spec.n_fock;
    for (;;) {
        LindbladModel m = build_model(p, HilbertSpec{nf});
        try {
            CompositeState s = steady_state(m);
            return {std::move(m), std::move(s)};
        } catch (const truncation_error&) {
            if (nf >= 20) throw;
            nf = std::min(2 * nf, 20);
        }
    }
}

inline double emission_rate(const LindbladModel& m, const CompositeState& s) {
    return 2.0 * m.params.kappa * (s.rho * m.photon_number).trace().real();
}

// photons/s leaking through the cavity mirror in steady state
inline double emission_rate(const LindbladModel& m) {
    return emission_rate(m, steady_state(m));
}

struct EvolveOptions {
    double trace_tol = 1e-8;
    double positivity_tol = 1e-7; // integration error allowance
};

// Fixed-step RK4 on the vectorized master equation. The step resolves the
// fastest rate in the problem with a factor-20 margin; output states land
// exactly on the requested grid.
inline std::vector<CompositeState> evolve(const LindbladModel& m, const CompositeState& initial,
                                          const std::vector<double>& t_grid,
                                          const EvolveOptions& opt = {}) {
    m.validate();
    initial.validate();
    if (initial.spec.n_fock != m.spec.n_fock)
        throw std::invalid_argument("evolve: state and model Hilbert spaces differ");
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw std::invalid_argument("evolve: t_grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("evolve: t_grid must be strictly increasing");

    const SystemParams& p = m.params;
    double c = p.g * p.g / (2.0 * p.kappa * p.gamma);
    double fastest = std::max({2.0 * p.kappa, 2.0 * p.gamma * (2.0 * c + 1.0),
                               p.omega, std::abs(p.delta_a), std::abs(p.delta_c)});
    double h_max = 1.0 / (20.0 * fastest);
    if (!(h_max > 0.0) || !std::isfinite(h_max))
        throw std::runtime_error("evolve: cannot choose a finite step size");

    const Eigen::Index d = m.hamiltonian.rows();
    CMatrix L = liouvillian_matrix(m);
    CVector v = Eigen::Map<const CVector>(initial.rho.data(), d * d);

    auto trace_of = [&](const CVector& w) {
        Cplx tr = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) tr += w[j * d + j];
        return tr;
    };

    std::vector<CompositeState> out;
    out.reserve(t_grid.size());
    double t = 0.0;
    for (double target : t_grid) {
        double span = target - t;
        if (span > 0.0) {
            auto steps = static_cast<long>(std::ceil(span / h_max));
            double h = span / static_cast<double>(steps);
            if (h < 1e-18)
                throw std::runtime_error("evolve: step size underflow");
            for (long s = 0; s < steps; ++s) {
                CVector k1 = L * v;
                CVector k2 = L * (v + 0.5 * h * k1);
                CVector k3 = L * (v + 0.5 * h * k2);
                CVector k4 = L * (v + h * k3);
                v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if (!v.allFinite())
                    throw std::runtime_error("evolve: integration diverged");
                if (std::abs(trace_of(v) - Cplx(1.0, 0.0)) > opt.trace_tol)
                    throw std::runtime_error("evolve: trace drifted beyond tolerance");
            }
            t = target;
        }
        CompositeState s{m.spec, Eigen::Map<CMatrix>(v.data(), d, d)};
        s.rho = 0.5 * (s.rho + s.rho.adjoint()).eval();
        s.validate(opt.positivity_tol);
        out.push_back(std::move(s));
    }
    return out;
}

struct FluxPoint {
    double t = 0.0;    // seconds
    double flux = 0.0; // photons/s out of the cavity
};

// cavity output flux 2*kappa*<n> along a trajectory
inline std::vector<FluxPoint> decay_curve(const LindbladModel& m, const CompositeState& initial,
                                          const std::vector<double>& t_grid,
                                          const EvolveOptions& opt = {}) {
    std::vector<CompositeState> traj = evolve(m, initial, t_grid, opt);
    std::vector<FluxPoint> out;
    out.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        double n = (traj[i].rho * m.photon_number).trace().real();
        out.push_back({t_grid[i], 2.0 * m.params.kappa * n});
    }
    return out;
}

} // namespace purcell

#endif
