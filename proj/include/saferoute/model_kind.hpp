#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace saferoute {

// The six competing forecasters.
enum class ModelKind { Poisson, Ols, Ridge, Lasso, Lstm, Gru };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::Poisson, ModelKind::Ols, ModelKind::Ridge,
    ModelKind::Lasso,   ModelKind::Lstm, ModelKind::Gru};

std::string model_kind_name(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view name);

}  // namespace saferoute
