#include "peacelens/dimensions.hpp"

#include <cctype>

namespace peacelens {

std::optional<PeaceDimension> parse_dimension(std::string_view text) {
  std::string norm;
  for (char c : text) {
    if (c == '-' || c == ' ' || c == '_') norm.push_back('_');
    else norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (auto d : kDimensions) {
    const auto p = poles(d);
    if (norm == std::string(p.first) + "_" + std::string(p.second) ||
        norm == std::string(p.second) + "_" + std::string(p.first))
      return d;
  }
  return std::nullopt;
}

}  // namespace peacelens
