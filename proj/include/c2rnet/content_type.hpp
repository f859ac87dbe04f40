#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace c2rnet {

// The eight news content types, in fixed code order 0..7.
enum class ContentType : int {
  MainEvent = 0,
  Consequence = 1,
  PreviousEvent = 2,
  CurrentContext = 3,
  HistoricalEvent = 4,
  AnecdotalEvent = 5,
  Evaluation = 6,
  Expectation = 7,
};

inline constexpr int kContentTypeCount = 8;

const std::array<ContentType, kContentTypeCount>& content_types();

std::string to_string(ContentType t);
std::optional<ContentType> content_type_from(std::string_view name);
inline int code(ContentType t) { return static_cast<int>(t); }

}  // namespace c2rnet
