#ifndef PURCELL_CSV_HPP
#define PURCELL_CSV_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace purcell {

// Fixed 9-significant-digit formatting so repeated runs emit byte-identical
// files. %g keeps small probabilities readable and large rates compact.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct XYData {
    std::vector<double> x;
    std::vector<double> y;
};

// Two-column numeric CSV, optional single header line. Used by the fit
// subcommand to ingest curves produced by the other subcommands.
inline XYData read_xy_csv(std::istream& in, const std::string& name = "<stream>") {
    XYData data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip trailing CR from files written on other platforms
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected two comma-separated columns");
        char* endx = nullptr;
        char* endy = nullptr;
        std::string xs = line.substr(0, comma);
        std::string ys = line.substr(comma + 1);
        double x = std::strtod(xs.c_str(), &endx);
        double y = std::strtod(ys.c_str(), &endy);
        bool xok = endx && *endx == '\0' && endx != xs.c_str();
        bool yok = endy && *endy == '\0' && endy != ys.c_str();
        if (!xok || !yok) {
            if (lineno == 1 && data.x.empty()) continue; // header line
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        data.x.push_back(x);
        data.y.push_back(y);
    }
    if (data.x.empty())
        throw std::runtime_error(name + ": no numeric rows");
    return data;
}

inline XYData read_xy_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_xy_csv(in, path);
}

} // namespace purcell

#endif
