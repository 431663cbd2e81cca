#include "cnmf/algorithm.hpp"

#include <algorithm>
#include <cctype>

#include "cnmf/errors.hpp"

namespace cnmf {

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mu: return "mu";
    case Algorithm::mu_rp: return "mu-rp";
    case Algorithm::hals: return "hals";
    case Algorithm::hals_rp: return "hals-rp";
    case Algorithm::fasthals: return "fasthals";
    case Algorithm::fasthals_rp: return "fasthals-rp";
  }
  return "mu";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  if (s == "mu") return Algorithm::mu;
  if (s == "mu-rp") return Algorithm::mu_rp;
  if (s == "hals") return Algorithm::hals;
  if (s == "hals-rp") return Algorithm::hals_rp;
  if (s == "fasthals") return Algorithm::fasthals;
  if (s == "fasthals-rp") return Algorithm::fasthals_rp;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected one of mu, mu-rp, hals, hals-rp, fasthals, fasthals-rp)");
}

}  // namespace cnmf
