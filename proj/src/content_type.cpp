#include "c2rnet/content_type.hpp"

namespace c2rnet {

namespace {
constexpr std::array<std::string_view, kContentTypeCount> kNames = {
    "MainEvent",      "Consequence",    "PreviousEvent", "CurrentContext",
    "HistoricalEvent", "AnecdotalEvent", "Evaluation",    "Expectation",
};
}  // namespace

const std::array<ContentType, kContentTypeCount>& content_types() {
  static const std::array<ContentType, kContentTypeCount> all = {
      ContentType::MainEvent,       ContentType::Consequence,
      ContentType::PreviousEvent,   ContentType::CurrentContext,
      ContentType::HistoricalEvent, ContentType::AnecdotalEvent,
      ContentType::Evaluation,      ContentType::Expectation,
  };
  return all;
}

std::string to_string(ContentType t) {
  return std::string(kNames[static_cast<size_t>(t)]);
}

std::optional<ContentType> content_type_from(std::string_view name) {
  for (size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<ContentType>(i);
  }
  return std::nullopt;
}

}  // namespace c2rnet
