#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bishop {

enum class Treatment { Pit, Miso };

std::string_view to_string(Treatment t);

enum class Provenance { Real, Synthetic };

/// The four continuous time outcomes, in column order.
enum class TimeOutcome { RomAdmit = 0, RomAgent = 1, AugFully = 2, AugDeliv = 3 };
inline constexpr std::size_t kTimeOutcomes = 4;
inline constexpr std::array<std::string_view, kTimeOutcomes> kTimeOutcomeColumns = {
    "rom_admit_h", "rom_agent_h", "aug_fully_h", "aug_deliv_h"};

/// One cohort row. Point fields follow the Bishop table: dilation, effacement
/// and station score 0..3; position + consistency is recorded as a single
/// 0..4 sum and may be missing.
struct PatientRecord {
  std::string id;
  int dilation_pts = 0;
  int effacement_pts = 0;
  int station_pts = 0;
  std::optional<int> poscon_pts;
  bool nullip = false;
  bool epidural = false;
  bool fgr = false;
  bool gbs = false;
  double ga_weeks = 0.0;
  double bmi = 0.0;
  Treatment treatment = Treatment::Miso;
  std::array<std::optional<double>, kTimeOutcomes> times;  // hours, > 0 when present
  bool cs = false;

  std::optional<double>& time(TimeOutcome o) { return times[static_cast<std::size_t>(o)]; }
  const std::optional<double>& time(TimeOutcome o) const {
    return times[static_cast<std::size_t>(o)];
  }

  bool operator==(const PatientRecord&) const = default;
};

/// Throws ValidationError naming the first violated field invariant.
void validate(const PatientRecord& r);

/// Non-empty set of valid records with unique ids.
class Cohort {
 public:
  Cohort(std::vector<PatientRecord> records, Provenance provenance);

  const std::vector<PatientRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  Provenance provenance() const noexcept { return provenance_; }
  const PatientRecord& operator[](std::size_t i) const { return records_[i]; }

  bool operator==(const Cohort&) const = default;

 private:
  std::vector<PatientRecord> records_;
  Provenance provenance_;
};

/// Maps canonical field names (the lowercase CSV headers) to the header
/// text found in a file. Unmapped fields use their canonical name.
struct CohortSchema {
  std::map<std::string, std::string> columns;

  static const std::vector<std::string>& canonical_columns();
  std::string header_for(const std::string& canonical) const;
};

struct RowDiagnostic {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string reason;
};

/// Output of the loader: every data row is either a record or a diagnostic.
struct LoadResult {
  std::vector<PatientRecord> records;
  std::vector<RowDiagnostic> diagnostics;
  std::size_t data_rows = 0;

  bool ok() const noexcept { return diagnostics.empty() && !records.empty(); }
  /// Throws ValidationError listing the diagnostics when !ok().
  Cohort to_cohort(Provenance provenance = Provenance::Real) const;
};

LoadResult parse_cohort_csv(std::string_view text, const CohortSchema& schema = {});
LoadResult load_cohort(const std::filesystem::path& path, const CohortSchema& schema = {});

std::string format_cohort_csv(const Cohort& cohort);
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

}  // namespace bishop
