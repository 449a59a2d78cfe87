#include "phoenix/label.hpp"

#include "phoenix/error.hpp"

namespace phoenix {

std::string_view to_string(Label label) noexcept { return label == Label::kFake ? "fake" : "real"; }

Label parse_label(std::string_view text) {
    if (text == "fake") return Label::kFake;
    if (text == "real") return Label::kReal;
    throw FormatError("unknown label '" + std::string(text) + "' (expected real or fake)");
}

}  // namespace phoenix
