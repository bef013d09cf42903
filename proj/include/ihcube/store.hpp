#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ihcube/index.hpp"

namespace ihcube {

// Index file: "IHCX", u32 version, u32 section count, then sections of
// (u32 tag, u64 length, payload, u32 CRC-32 of payload). Little-endian.
inline constexpr std::uint32_t kIndexFormatVersion = 1;

std::string serialize_index(const Index& index);
/// Validates magic, version, section checksums and lengths; throws
/// FormatError without returning a partial index.
Index deserialize_index(std::string_view bytes);

std::uint64_t serialized_size(const Index& index);

void save_index(const Index& index, const std::string& path);
Index load_index(const std::string& path);

}  // namespace ihcube
