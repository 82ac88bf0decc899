#include "bishop/posterior_io.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "bishop/errors.hpp"
#include "bishop/text.hpp"

namespace bishop {

using nlohmann::ordered_json;

std::string posterior_to_ndjson(const PosteriorDraws& draws) {
  std::string out;
  for (std::size_t c = 0; c < draws.num_chains(); ++c) {
    const auto& chain = draws.chains()[c];
    for (std::size_t d = 0; d < draws.num_draws(); ++d) {
      ordered_json j;
      j["chain"] = c;
      j["draw"] = d;
      auto& params = j["params"] = ordered_json::object();
      for (std::size_t p = 0; p < draws.num_params(); ++p) {
        params[draws.names()[p]] = draws.value(c, d, p);
      }
      const auto& s = chain.stats[d];
      j["stats"] = {{"divergent", s.divergent},   {"tree_depth", s.tree_depth},
                    {"accept", s.accept},         {"energy", s.energy},
                    {"energy_error", s.energy_error}, {"step_size", s.step_size},
                    {"n_leapfrog", s.n_leapfrog}, {"lp", s.lp}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

PosteriorDraws posterior_from_ndjson(const std::string& text) {
  std::vector<std::string> names;
  std::map<std::size_t, ChainDraws> chains;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::string where = "posterior line " + std::to_string(line_no);
    try {
      const auto j = ordered_json::parse(line);
      const auto chain = j.at("chain").get<std::size_t>();
      const auto draw = j.at("draw").get<std::size_t>();
      const auto& params = j.at("params");
      if (!params.is_object()) throw ValidationError(where + ": params must be an object");
      if (names.empty()) {
        for (const auto& [k, v] : params.items()) names.push_back(k);
        if (names.empty()) throw ValidationError(where + ": no parameters");
      }
      if (params.size() != names.size()) {
        throw ValidationError(where + ": parameter count differs from the first line");
      }
      auto& cd = chains[chain];
      if (draw != cd.stats.size()) {
        throw ValidationError(where + ": draws of chain " + std::to_string(chain) +
                              " are not consecutive from 0");
      }
      std::size_t i = 0;
      for (const auto& [k, v] : params.items()) {
        if (k != names[i++]) throw ValidationError(where + ": parameter names differ in order");
        cd.values.push_back(v.get<double>());
      }
      const auto& st = j.at("stats");
      DrawStats s;
      s.divergent = st.at("divergent").get<bool>();
      s.tree_depth = st.at("tree_depth").get<int>();
      s.accept = st.at("accept").get<double>();
      s.energy = st.at("energy").get<double>();
      s.energy_error = st.value("energy_error", 0.0);
      s.step_size = st.value("step_size", 0.0);
      s.n_leapfrog = st.value("n_leapfrog", 0);
      s.lp = st.value("lp", 0.0);
      cd.step_size = s.step_size;
      cd.stats.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (chains.empty()) throw ValidationError("posterior file has no draws");
  std::vector<ChainDraws> ordered;
  std::size_t expect = 0;
  for (auto& [index, cd] : chains) {
    if (index != expect++) throw ValidationError("posterior chains are not numbered 0..m-1");
    ordered.push_back(std::move(cd));
  }
  return PosteriorDraws(std::move(names), std::move(ordered));
}

std::string posterior_to_csv(const PosteriorDraws& draws) {
  std::ostringstream out;
  out << "chain,draw";
  for (const auto& n : draws.names()) out << ',' << n;
  out << ",divergent,tree_depth,accept,energy,energy_error,step_size,n_leapfrog,lp\n";
  for (std::size_t c = 0; c < draws.num_chains(); ++c) {
    for (std::size_t d = 0; d < draws.num_draws(); ++d) {
      out << c << ',' << d;
      for (std::size_t p = 0; p < draws.num_params(); ++p) out << ',' << format_real(draws.value(c, d, p));
      const auto& s = draws.chains()[c].stats[d];
      out << ',' << (s.divergent ? 1 : 0) << ',' << s.tree_depth << ',' << format_real(s.accept)
          << ',' << format_real(s.energy) << ',' << format_real(s.energy_error) << ','
          << format_real(s.step_size) << ',' << s.n_leapfrog << ',' << format_real(s.lp) << '\n';
    }
  }
  return out.str();
}

}  // namespace bishop
