#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace actlumos {

/// SHA-256 of a byte string, as lowercase hex. Used for config fingerprints
/// and output-content hashes in run manifests.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's contents; throws MissingArtifact if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace actlumos
