#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace netad {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

std::vector<std::string> split_fields(std::string_view line, char delimiter = ',');

std::string_view trim(std::string_view s);

}  // namespace netad
