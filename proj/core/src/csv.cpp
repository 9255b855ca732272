#include "dsolab/csv.hpp"

#include "dsolab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace dsolab::csv {

std::string num(double v) {
    if (v == 0.0) {
        return "0";  // folds -0 into 0
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& field) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str()) {
        throw ConfigError("not a number: '" + field + "'");
    }
    return v;
}

}  // namespace dsolab::csv
