#include "sizer/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sizer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kHeader =
    "generation,best_fitness,mean_fitness,cum_calls,cum_reject_classifier,cum_reject_regressor,"
    "cum_reject_spice";

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_trace_csv(const RunTrace& t, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kHeader << '\n';
  for (const auto& g : t.generations) {
    out << g.generation << ',' << fmt(g.best_fitness) << ',' << fmt(g.mean_fitness) << ','
        << g.cum_calls << ',' << g.cum_rejects.classifier << ',' << g.cum_rejects.regressor << ','
        << g.cum_rejects.spice() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<GenerationRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error(path.string() + ": unexpected trace header");
  }
  std::vector<GenerationRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[7];
    for (auto& c : cell) {
      if (!std::getline(ss, c, ',')) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": short row");
      }
    }
    GenerationRecord g;
    g.generation = std::stoull(cell[0]);
    g.best_fitness = std::strtod(cell[1].c_str(), nullptr);
    g.mean_fitness = std::strtod(cell[2].c_str(), nullptr);
    g.cum_calls = std::stoull(cell[3]);
    g.cum_rejects.classifier = std::stoull(cell[4]);
    g.cum_rejects.regressor = std::stoull(cell[5]);
    g.cum_rejects.spice_constraint = std::stoull(cell[6]);  // aggregate spice rejections
    out.push_back(g);
  }
  return out;
}

json trace_summary(const RunTrace& t) {
  json j = {{"mode", to_string(t.mode)},
            {"seed", t.seed},
            {"best_fitness", finite_or_null(t.best_fitness())},
            {"total_calls", t.total_calls()},
            {"generations", t.generations.empty() ? 0 : t.generations.back().generation}};
  if (t.best) j["best_x"] = t.best->x.vec();
  if (!t.generations.empty()) {
    const auto& r = t.generations.back().cum_rejects;
    j["rejects"] = {{"geometry", r.geometry},
                    {"classifier", r.classifier},
                    {"regressor", r.regressor},
                    {"spice_constraint", r.spice_constraint},
                    {"spice_saturation", r.spice_saturation},
                    {"spice_failure", r.spice_failure},
                    {"passed", r.passed}};
    j["penalized_slots"] = t.generations.back().penalized_slots;
  }
  return j;
}

}  // namespace sizer
