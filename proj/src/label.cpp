#include "arhate/label.hpp"

namespace arhate {

namespace {
constexpr std::array<std::string_view, kNumLabels> kNames{"NH", "GH", "Re", "Ra", "Se"};
}

std::string_view to_string(Label label) noexcept { return kNames[index_of(label)]; }

std::optional<Label> parse_label(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kNames[i] == text) return label_at(i);
  }
  return std::nullopt;
}

}  // namespace arhate
