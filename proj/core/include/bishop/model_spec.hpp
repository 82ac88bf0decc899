#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bishop {

/// Modelled outcomes. The first four are continuous times, cs is binary.
enum class Outcome : std::size_t { RomAdmit = 0, RomAgent, AugFully, AugDeliv, Cs };
inline constexpr std::size_t kOutcomes = 5;
inline constexpr std::array<std::string_view, kOutcomes> kOutcomeNames = {
    "rom_admit", "rom_agent", "aug_fully", "aug_deliv", "cs"};

/// Outcome covariates. Each covariate is one hyperprior family.
enum class Covariate : std::size_t {
  Dilation = 0,
  Effacement,
  Station,
  Poscon,
  Treatment,
  Gbs,
  Nullip,
  Epidural,
  Fgr,
  Bmi,
  Ga
};
inline constexpr std::size_t kCovariates = 11;
inline constexpr std::array<std::string_view, kCovariates> kCovariateNames = {
    "dilation", "effacement", "station", "poscon", "treatment", "gbs",
    "nullip",   "epidural",   "fgr",     "bmi",    "ga"};

std::string_view name_of(Outcome o);
std::string_view name_of(Covariate c);
Outcome outcome_from_name(std::string_view name);
Covariate covariate_from_name(std::string_view name);

/// One outcome-specific regression coefficient.
struct Coefficient {
  Outcome outcome;
  Covariate covariate;
  std::size_t family;  // index into ModelSpec::families()

  std::string name() const;  // "beta.<covariate>.<outcome>"
};

/// Which covariates drive which outcome, and which coefficients share a
/// hyperprior. Coefficients are ordered by outcome, shared covariates first.
class ModelSpec {
 public:
  /// The wiring used throughout: dilation, effacement, station, poscon and
  /// treatment on every outcome; gbs on both ROM outcomes; nullip and epidural
  /// on both augmentation outcomes; fgr on augmentation-to-delivery; bmi and
  /// ga on cs.
  static ModelSpec standard();

  ModelSpec(std::vector<Covariate> shared,
            std::array<std::vector<Covariate>, kOutcomes> extras);

  const std::vector<Covariate>& shared() const noexcept { return shared_; }
  const std::vector<Covariate>& extras(Outcome o) const {
    return extras_[static_cast<std::size_t>(o)];
  }
  const std::vector<Coefficient>& coefficients() const noexcept { return coefficients_; }
  /// Hyperprior families, one per covariate in use.
  const std::vector<Covariate>& families() const noexcept { return families_; }
  /// Coefficient indices belonging to family f.
  std::vector<std::size_t> family_members(std::size_t f) const;
  /// Coefficient indices used by outcome o, in predictor order.
  const std::vector<std::size_t>& outcome_coefficients(Outcome o) const {
    return by_outcome_[static_cast<std::size_t>(o)];
  }
  /// Index of the (outcome, covariate) coefficient; throws ValidationError
  /// when the covariate is not wired to the outcome.
  std::size_t coefficient_index(Outcome o, Covariate c) const;
  bool uses(Outcome o, Covariate c) const;

  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);

  bool operator==(const ModelSpec&) const = default;

 private:
  std::vector<Covariate> shared_;
  std::array<std::vector<Covariate>, kOutcomes> extras_;
  std::vector<Coefficient> coefficients_;
  std::vector<Covariate> families_;
  std::array<std::vector<std::size_t>, kOutcomes> by_outcome_;
};

inline bool operator==(const Coefficient& a, const Coefficient& b) {
  return a.outcome == b.outcome && a.covariate == b.covariate && a.family == b.family;
}

}  // namespace bishop
