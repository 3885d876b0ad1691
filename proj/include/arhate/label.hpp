#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace arhate {

/// The five-way hate-speech taxonomy. Enumerator order is the canonical
/// column order of every probability matrix and metrics table.
enum class Label : std::uint8_t { NH = 0, GH = 1, Re = 2, Ra = 3, Se = 4 };

inline constexpr std::size_t kNumLabels = 5;

inline constexpr std::array<Label, kNumLabels> kAllLabels{
    Label::NH, Label::GH, Label::Re, Label::Ra, Label::Se};

template <typename T>
using ClassVector = std::array<T, kNumLabels>;

constexpr std::size_t index_of(Label label) noexcept {
  return static_cast<std::size_t>(label);
}

constexpr Label label_at(std::size_t column) noexcept {
  return static_cast<Label>(column);
}

constexpr bool is_hate(Label label) noexcept { return label != Label::NH; }

std::string_view to_string(Label label) noexcept;

/// Accepts the canonical short names only ("NH", "GH", "Re", "Ra", "Se").
std::optional<Label> parse_label(std::string_view text) noexcept;

}  // namespace arhate
