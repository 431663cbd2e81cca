#pragma once

#include <string>
#include <string_view>

namespace cnmf {

enum class Algorithm {
  mu,
  mu_rp,
  hals,
  hals_rp,
  fasthals,
  fasthals_rp,
};

constexpr bool is_rp(Algorithm a) {
  return a == Algorithm::mu_rp || a == Algorithm::hals_rp ||
         a == Algorithm::fasthals_rp;
}

constexpr bool is_hals_family(Algorithm a) {
  return a == Algorithm::hals || a == Algorithm::hals_rp ||
         a == Algorithm::fasthals || a == Algorithm::fasthals_rp;
}

std::string_view algorithm_name(Algorithm a);

// Accepts the canonical names ("mu", "mu-rp", "hals", "hals-rp", "fasthals",
// "fasthals-rp"); underscores are tolerated in place of hyphens.
Algorithm parse_algorithm(std::string_view name);

}  // namespace cnmf
