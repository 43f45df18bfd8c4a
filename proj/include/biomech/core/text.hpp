#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace biomech::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Whitespace-delimited tokens.
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

/// Lowercase, ASCII punctuation removed, whitespace runs collapsed to one
/// space, trimmed. Used for dedup keys.
std::string normalize_for_dedup(std::string_view s);

/// "manage-turbulence" -> "Manage Turbulence".
std::string title_from_slug(std::string_view slug);
/// "Manage Turbulence" -> "manage-turbulence".
std::string slugify(std::string_view title);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace biomech::text
