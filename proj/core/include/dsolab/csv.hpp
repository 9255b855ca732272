#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dsolab::csv {

/// Fixed 12-significant-digit rendering used by every CSV the library writes,
/// so identical runs produce identical bytes.
std::string num(double v);

std::vector<std::string> split_line(std::string_view line);

double parse_double(const std::string& field);

}  // namespace dsolab::csv
