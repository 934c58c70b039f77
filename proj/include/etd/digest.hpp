#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "etd/bytes.hpp"

namespace etd {

std::string sha256_hex(ByteView data);
std::string sha256_hex(std::string_view text);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace etd
