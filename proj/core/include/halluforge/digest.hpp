#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace halluforge {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

/// 16-char lowercase hex.
std::string to_hex(std::uint64_t value);

/// Digest of a JSON value over its canonical serialization (sorted keys,
/// no insignificant whitespace). This keys mock fixtures and manifests.
std::string digest_json(const nlohmann::json& value);

/// Digest of a file's raw bytes.
std::string digest_file(const std::string& path);

}  // namespace halluforge
