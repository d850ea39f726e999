#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace peacelens::util {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view data);
std::string to_hex(const Sha256& digest);
std::string sha256_hex(std::string_view data);

}  // namespace peacelens::util
