#include "bishop/cohort.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "bishop/errors.hpp"
#include "bishop/text.hpp"

namespace bishop {

std::string_view to_string(Treatment t) { return t == Treatment::Pit ? "PIT" : "MISO"; }

namespace {

void check_points(const char* name, int value, int hi) {
  if (value < 0 || value > hi) {
    throw ValidationError(std::string(name) + "=" + std::to_string(value) +
                          " outside Bishop table range 0.." + std::to_string(hi));
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct FieldError {
  std::string message;
};

double parse_real(std::string_view cell, const std::string& column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FieldError{"malformed numeric cell '" + std::string(cell) + "' in " + column};
  }
  return v;
}

int parse_int(std::string_view cell, const std::string& column) {
  int v = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FieldError{"malformed integer cell '" + std::string(cell) + "' in " + column};
  }
  return v;
}

bool parse_bool(std::string_view cell, const std::string& column) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  throw FieldError{"boolean cell '" + std::string(cell) + "' in " + column + " must be 0 or 1"};
}

}  // namespace

void validate(const PatientRecord& r) {
  if (r.id.empty()) throw ValidationError("empty id");
  check_points("dilation_pts", r.dilation_pts, 3);
  check_points("effacement_pts", r.effacement_pts, 3);
  check_points("station_pts", r.station_pts, 3);
  if (r.poscon_pts) check_points("poscon_pts", *r.poscon_pts, 4);
  if (!std::isfinite(r.ga_weeks) || r.ga_weeks <= 0) {
    throw ValidationError("ga_weeks must be a positive finite number");
  }
  if (!std::isfinite(r.bmi) || r.bmi <= 0) {
    throw ValidationError("bmi must be a positive finite number");
  }
  for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
    const auto& t = r.times[o];
    if (t && !(std::isfinite(*t) && *t > 0)) {
      throw ValidationError(std::string(kTimeOutcomeColumns[o]) + " must be > 0 when present");
    }
  }
}

Cohort::Cohort(std::vector<PatientRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(provenance) {
  if (records_.empty()) throw ValidationError("cohort must contain at least one record");
  std::unordered_set<std::string> ids;
  for (const auto& r : records_) {
    validate(r);
    if (!ids.insert(r.id).second) throw ValidationError("duplicate id '" + r.id + "'");
  }
}

const std::vector<std::string>& CohortSchema::canonical_columns() {
  static const std::vector<std::string> cols = {
      "id",     "dilation_pts", "effacement_pts", "station_pts", "poscon_pts",
      "nullip", "epidural",     "fgr",            "gbs",         "ga_weeks",
      "bmi",    "treatment",    "rom_admit_h",    "rom_agent_h", "aug_fully_h",
      "aug_deliv_h", "cs"};
  return cols;
}

std::string CohortSchema::header_for(const std::string& canonical) const {
  const auto it = columns.find(canonical);
  return it == columns.end() ? canonical : it->second;
}

Cohort LoadResult::to_cohort(Provenance provenance) const {
  if (!diagnostics.empty()) {
    std::ostringstream msg;
    msg << diagnostics.size() << " invalid row(s)";
    for (const auto& d : diagnostics) msg << "\n  row " << d.row << ": " << d.reason;
    throw ValidationError(msg.str());
  }
  return Cohort(records, provenance);
}

LoadResult parse_cohort_csv(std::string_view text, const CohortSchema& schema) {
  std::vector<std::string_view> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ValidationError("cohort file is empty");

  const auto& canonical = CohortSchema::canonical_columns();
  const auto header = split(trim(lines.front()), ',');
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[std::string(trim(header[i]))] = i;
  std::vector<std::size_t> col(canonical.size());
  for (std::size_t c = 0; c < canonical.size(); ++c) {
    const std::string name = schema.header_for(canonical[c]);
    const auto it = position.find(name);
    if (it == position.end()) throw ValidationError("header is missing column '" + name + "'");
    col[c] = it->second;
  }
  if (header.size() != canonical.size()) {
    throw ValidationError("header has " + std::to_string(header.size()) + " columns, expected " +
                          std::to_string(canonical.size()));
  }

  LoadResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;
    ++result.data_rows;
    const auto cells = split(trim(lines[li]), ',');
    if (cells.size() != header.size()) {
      result.diagnostics.push_back({row, "expected " + std::to_string(header.size()) +
                                             " cells, found " + std::to_string(cells.size())});
      continue;
    }
    auto cell = [&](std::size_t c) { return trim(cells[col[c]]); };
    auto required = [&](std::size_t c) {
      const auto v = cell(c);
      if (v.empty()) throw FieldError{"missing required value in " + canonical[c]};
      return v;
    };
    try {
      PatientRecord r;
      r.id = std::string(required(0));
      r.dilation_pts = parse_int(required(1), canonical[1]);
      r.effacement_pts = parse_int(required(2), canonical[2]);
      r.station_pts = parse_int(required(3), canonical[3]);
      if (!cell(4).empty()) r.poscon_pts = parse_int(cell(4), canonical[4]);
      r.nullip = parse_bool(required(5), canonical[5]);
      r.epidural = parse_bool(required(6), canonical[6]);
      r.fgr = parse_bool(required(7), canonical[7]);
      r.gbs = parse_bool(required(8), canonical[8]);
      r.ga_weeks = parse_real(required(9), canonical[9]);
      r.bmi = parse_real(required(10), canonical[10]);
      const auto arm = required(11);
      if (arm == "PIT") {
        r.treatment = Treatment::Pit;
      } else if (arm == "MISO") {
        r.treatment = Treatment::Miso;
      } else {
        throw FieldError{"unknown treatment label '" + std::string(arm) + "'"};
      }
      for (std::size_t o = 0; o < kTimeOutcomes; ++o) {
        const auto v = cell(12 + o);
        if (!v.empty()) r.times[o] = parse_real(v, canonical[12 + o]);
      }
      r.cs = parse_bool(required(16), canonical[16]);
      validate(r);
      if (!seen.insert(r.id).second) throw FieldError{"duplicate id '" + r.id + "'"};
      result.records.push_back(std::move(r));
    } catch (const FieldError& e) {
      result.diagnostics.push_back({row, e.message});
    } catch (const ValidationError& e) {
      result.diagnostics.push_back({row, e.what()});
    }
  }
  return result;
}

LoadResult load_cohort(const std::filesystem::path& path, const CohortSchema& schema) {
  return parse_cohort_csv(read_text_file(path), schema);
}

std::string format_cohort_csv(const Cohort& cohort) {
  std::ostringstream out;
  const auto& cols = CohortSchema::canonical_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& r : cohort.records()) {
    out << r.id << ',' << r.dilation_pts << ',' << r.effacement_pts << ',' << r.station_pts
        << ',';
    if (r.poscon_pts) out << *r.poscon_pts;
    out << ',' << r.nullip << ',' << r.epidural << ',' << r.fgr << ',' << r.gbs << ','
        << format_real(r.ga_weeks) << ',' << format_real(r.bmi) << ',' << to_string(r.treatment);
    for (const auto& t : r.times) {
      out << ',';
      if (t) out << format_real(*t);
    }
    out << ',' << r.cs << '\n';
  }
  return out.str();
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  write_text_file(path, format_cohort_csv(cohort));
}

}  // namespace bishop
