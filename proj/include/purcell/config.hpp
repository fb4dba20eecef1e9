#ifndef PURCELL_CONFIG_HPP
#define PURCELL_CONFIG_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "counting.hpp"
#include "liouville.hpp"
#include "protocol.hpp"
#include "qed.hpp"
#include "units.hpp"

namespace purcell {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One [readout.<name>] block. Rates below are free-space-equivalent photon
// emission rates; omega and rc_target are the two ways to pin the drive, and
// detected_rate is an observed detector-side rate for dead-time correction.
struct ReadoutEntry {
    std::string name;
    double duration = 0.0;      // seconds
    double omega = -1.0;        // rad/s, < 0 means unset
    double rc_target = -1.0;    // counts/s, < 0 means unset
    double detected_rate = -1.0; // counts/s, < 0 means unset
    double depump_rate = 0.0;   // 1/s
};

struct ScanConfig {
    double span_mhz = 200.0; // scan covers [-span, +span]
    double step_mhz = 0.3;
};

struct DecayConfig {
    double horizon = 15e-9;      // seconds
    int points = 151;
    double window_start = -1.0;  // seconds, < 0 means auto (0.2 * horizon)

    double effective_window_start() const {
        return window_start < 0.0 ? 0.2 * horizon : window_start;
    }
};

struct RunSection {
    std::uint64_t seed = 1;
    int workers = 1;
    std::uint64_t n_trials = 1000000;
};

struct RunConfig {
    SystemParams system;
    HilbertSpec hilbert;
    DetectorModel detector;
    std::vector<ReadoutEntry> readouts;
    PumpModel pump;
    bool pump_tau_set = false; // false: derive tau from the protocol pump time
    ProtocolConfig protocol;
    int n_max = 20; // segment-count search bound
    ScanConfig scan;
    DecayConfig decay;
    RunSection run;
    std::set<std::string> sections; // which blocks the file actually provided

    bool has(const std::string& section) const { return sections.count(section) > 0; }

    // tau if given, otherwise the value that makes a full-length pump end at
    // 1e-3 residual population
    double pump_tau() const {
        if (pump_tau_set) return pump.tau;
        return protocol.total_pump_time / std::log(1e3);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw config_error(where + ": expected a number, got '" + value + "'");
    }
    if (used != value.size())
        throw config_error(where + ": trailing characters in '" + value + "'");
    return v;
}

inline long long parse_int(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw config_error(where + ": expected an integer, got '" + value + "'");
    }
    if (used != value.size())
        throw config_error(where + ": trailing characters in '" + value + "'");
    return v;
}

// Durations must carry a unit so nanosecond and microsecond scales can't be
// silently confused: "28 ns", "9us", "1.5 ms", "0.2 s".
inline double parse_time(const std::string& value, const std::string& where) {
    static const std::pair<const char*, double> units[] = {
        {"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
    for (const auto& [suffix, scale] : units) {
        std::size_t len = std::string(suffix).size();
        if (value.size() > len && value.compare(value.size() - len, len, suffix) == 0) {
            std::string head = trim(value.substr(0, value.size() - len));
            if (head.empty()) break;
            return parse_double(head, where) * scale;
        }
    }
    throw config_error(where + ": time value '" + value +
                       "' needs a unit suffix (ns, us, ms, s)");
}

} // namespace detail

// Strict INI reader: '#' and ';' start comments, every section and key must
// be known, duplicates are rejected, and all errors carry their location.
inline RunConfig parse_config(std::istream& in, const std::string& origin = "config") {
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_time;
    using detail::trim;

    RunConfig cfg;
    std::string line, section;
    std::set<std::string> readout_names;
    std::set<std::string> seen_keys;
    int lineno = 0;

    auto where = [&](const std::string& key) {
        return origin + ":" + std::to_string(lineno) + " [" + section + "] " + key;
    };

    while (std::getline(in, line)) {
        ++lineno;
        std::size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.erase(cut);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(origin + ":" + std::to_string(lineno) +
                                   ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw config_error(origin + ":" + std::to_string(lineno) + ": empty section name");
            bool is_readout = section.rfind("readout.", 0) == 0;
            static const std::set<std::string> known = {"system",   "hilbert", "detector",
                                                        "pump",     "protocol", "scan",
                                                        "decay",    "run"};
            if (!is_readout && !known.count(section))
                throw config_error(origin + ":" + std::to_string(lineno) + ": unknown section [" +
                                   section + "]");
            if (is_readout) {
                std::string name = section.substr(8);
                if (name.empty())
                    throw config_error(origin + ":" + std::to_string(lineno) +
                                       ": readout section needs a name");
                if (!readout_names.insert(name).second)
                    throw config_error(origin + ":" + std::to_string(lineno) +
                                       ": duplicate readout section '" + name + "'");
                cfg.readouts.push_back(ReadoutEntry{});
                cfg.readouts.back().name = name;
            } else if (!cfg.sections.insert(section).second) {
                throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate section [" +
                                   section + "]");
            }
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw config_error(origin + ":" + std::to_string(lineno) +
                               ": key outside of any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (!seen_keys.insert(section + "/" + key).second)
            throw config_error(where(key) + ": duplicate key");

        if (section == "system") {
            // plain numbers in MHz, stored internally as angular rad/s
            if (key == "g") cfg.system.g = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "kappa") cfg.system.kappa = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "gamma") cfg.system.gamma = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "delta_a") cfg.system.delta_a = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "delta_c") cfg.system.delta_c = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "omega") cfg.system.omega = mhz_to_rad(parse_double(value, where(key)));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "hilbert") {
            if (key == "n_fock") cfg.hilbert.n_fock = static_cast<int>(parse_int(value, where(key)));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "detector") {
            if (key == "efficiency") cfg.detector.efficiency = parse_double(value, where(key));
            else if (key == "dead_time") cfg.detector.dead_time = parse_time(value, where(key));
            else if (key == "background_rate")
                cfg.detector.background_rate = parse_double(value, where(key));
            else throw config_error(where(key) + ": unknown key");
        } else if (section.rfind("readout.", 0) == 0) {
            ReadoutEntry& r = cfg.readouts.back();
            if (key == "duration") r.duration = parse_time(value, where(key));
            else if (key == "omega") r.omega = mhz_to_rad(parse_double(value, where(key)));
            else if (key == "rc_target") r.rc_target = parse_double(value, where(key));
            else if (key == "detected_rate") r.detected_rate = parse_double(value, where(key));
            else if (key == "depump_rate") r.depump_rate = parse_double(value, where(key));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "pump") {
            if (key == "tau") {
                cfg.pump.tau = parse_time(value, where(key));
                cfg.pump_tau_set = true;
            } else if (key == "r") cfg.pump.r = parse_double(value, where(key));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "protocol") {
            if (key == "total_pump_time")
                cfg.protocol.total_pump_time = parse_time(value, where(key));
            else if (key == "readout_time") cfg.protocol.readout_time = parse_time(value, where(key));
            else if (key == "n_segments")
                cfg.protocol.n_segments = static_cast<int>(parse_int(value, where(key)));
            else if (key == "n_max") cfg.n_max = static_cast<int>(parse_int(value, where(key)));
            else if (key == "initial_state") {
                std::size_t comma = value.find(',');
                if (comma == std::string::npos)
                    throw config_error(where(key) + ": expected two comma-separated numbers");
                cfg.protocol.initial_state[0] = parse_double(trim(value.substr(0, comma)), where(key));
                cfg.protocol.initial_state[1] = parse_double(trim(value.substr(comma + 1)), where(key));
            } else throw config_error(where(key) + ": unknown key");
        } else if (section == "scan") {
            if (key == "span") cfg.scan.span_mhz = parse_double(value, where(key));
            else if (key == "step") cfg.scan.step_mhz = parse_double(value, where(key));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "decay") {
            if (key == "horizon") cfg.decay.horizon = parse_time(value, where(key));
            else if (key == "points") cfg.decay.points = static_cast<int>(parse_int(value, where(key)));
            else if (key == "window_start")
                cfg.decay.window_start = value == "auto" ? -1.0 : parse_time(value, where(key));
            else throw config_error(where(key) + ": unknown key");
        } else if (section == "run") {
            if (key == "seed")
                cfg.run.seed = static_cast<std::uint64_t>(parse_int(value, where(key)));
            else if (key == "workers") cfg.run.workers = static_cast<int>(parse_int(value, where(key)));
            else if (key == "n_trials")
                cfg.run.n_trials = static_cast<std::uint64_t>(parse_int(value, where(key)));
            else throw config_error(where(key) + ": unknown key");
        }
    }

    // immediate validation for the blocks the file provided, so mistakes are
    // reported against the file rather than deep inside a command
    try {
        if (cfg.has("system")) cfg.system.validate();
        if (cfg.has("hilbert")) cfg.hilbert.validate();
        if (cfg.has("detector")) cfg.detector.validate();
        if (cfg.has("pump") && cfg.pump_tau_set) cfg.pump.validate();
        if (cfg.has("protocol")) cfg.protocol.validate();
        for (const ReadoutEntry& r : cfg.readouts) {
            if (!(r.duration > 0.0))
                throw std::invalid_argument("readout '" + r.name + "': duration must be set and > 0");
            if (r.omega >= 0.0 && r.rc_target >= 0.0)
                throw std::invalid_argument("readout '" + r.name +
                                            "': omega and rc_target are mutually exclusive");
            if (r.depump_rate < 0.0)
                throw std::invalid_argument("readout '" + r.name + "': depump_rate must be >= 0");
        }
        if (cfg.has("scan")) {
            if (!(cfg.scan.span_mhz > 0.0) || !(cfg.scan.step_mhz > 0.0))
                throw std::invalid_argument("scan: span and step must be > 0");
        }
        if (cfg.has("decay")) {
            if (!(cfg.decay.horizon > 0.0)) throw std::invalid_argument("decay: horizon must be > 0");
            if (cfg.decay.points < 2) throw std::invalid_argument("decay: points must be >= 2");
        }
        if (cfg.run.workers < 1 || cfg.run.n_trials == 0)
            throw std::invalid_argument("run: workers must be >= 1 and n_trials > 0");
    } catch (const std::invalid_argument& e) {
        throw config_error(origin + ": " + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

} // namespace purcell

#endif
