#pragma once

#include <string>
#include <string_view>

namespace phoenix {

enum class Label : int { kReal = 0, kFake = 1 };

std::string_view to_string(Label label) noexcept;

/// Accepts "real" / "fake"; throws FormatError otherwise.
Label parse_label(std::string_view text);

}  // namespace phoenix
