#include "sizer/external.hpp"

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace sizer {

namespace fs = std::filesystem;

void ExternalSimConfig::validate() const {
  if (command.find(kInputPlaceholder) == std::string::npos) {
    throw std::invalid_argument("external command must contain the {input} placeholder");
  }
  if (!(timeout_seconds > 0.0)) throw std::invalid_argument("external timeout must be positive");
  if (metric_file.empty()) throw std::invalid_argument("external metric file name is empty");
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line_no) {
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE) {
    throw MetricFormatError("line " + std::to_string(line_no) + ": bad number '" + tmp + "'");
  }
  return v;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const fs::path& parent) {
    fs::path base = parent.empty() ? fs::temp_directory_path() : parent;
    fs::create_directories(base);
    std::string tmpl = (base / "sizer-sim-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed under " + base.string());
    }
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace

EvaluationResult parse_metric_file(std::string_view text) {
  EvaluationResult r;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() < 3 || tok.size() > 4) {
      throw MetricFormatError("line " + std::to_string(line_no) + ": expected 3 or 4 fields");
    }
    const std::string_view ctx = tok.size() == 4 ? tok[2] : std::string_view{};
    const std::string key = metric_key(tok[1], ctx);
    const std::string_view value = tok.back();
    if (tok[0] == "metric") {
      r.metrics[key] = parse_double(value, line_no);
    } else if (tok[0] == "saturation") {
      if (value != "0" && value != "1") {
        throw MetricFormatError("line " + std::to_string(line_no) + ": saturation must be 0 or 1");
      }
      r.saturation[key] = value == "1";
    } else {
      throw MetricFormatError("line " + std::to_string(line_no) + ": unknown record '" +
                              std::string(tok[0]) + "'");
    }
  }
  return r;
}

std::string render_netlist(std::string_view tmpl, const std::vector<std::string>& names,
                           const DesignVector& x) {
  if (names.size() != x.dim()) throw std::invalid_argument("render_netlist: dimension mismatch");
  std::string out(tmpl);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string ph = "{{" + names[i] + "}}";
    const std::string value = format_value(x[i]);
    std::size_t at = out.find(ph);
    if (at == std::string::npos) {
      throw std::invalid_argument("netlist template has no placeholder " + ph);
    }
    while (at != std::string::npos) {
      out.replace(at, ph.size(), value);
      at = out.find(ph, at + value.size());
    }
  }
  return out;
}

ExternalEvaluator::ExternalEvaluator(ExternalSimConfig cfg, std::vector<std::string> variable_names)
    : cfg_(std::move(cfg)), names_(std::move(variable_names)) {
  cfg_.validate();
  template_ = read_file(cfg_.netlist_template);
  for (const auto& n : names_) {
    if (template_.find("{{" + n + "}}") == std::string::npos) {
      throw std::invalid_argument("netlist template has no placeholder {{" + n + "}}");
    }
  }
}

EvaluationResult ExternalEvaluator::do_evaluate(const DesignVector& x) const {
  TempDir dir(cfg_.working_directory);
  const fs::path input = dir.path / "input.cir";
  {
    std::ofstream out(input);
    out << render_netlist(template_, names_, x);
    if (!out) return EvaluationResult::failed(FailureKind::ProcessError, "cannot write netlist");
  }

  std::string cmd = cfg_.command;
  for (std::size_t at = cmd.find(kInputPlaceholder); at != std::string::npos;
       at = cmd.find(kInputPlaceholder, at)) {
    const std::string quoted = shell_quote(input.string());
    cmd.replace(at, kInputPlaceholder.size(), quoted);
    at += quoted.size();
  }
  const std::string workdir = dir.path.string();

  const pid_t pid = ::fork();
  if (pid < 0) return EvaluationResult::failed(FailureKind::ProcessError, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(workdir.c_str()) != 0) ::_exit(126);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(cfg_.timeout_seconds));
  int status = 0;
  for (;;) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) {
      return EvaluationResult::failed(FailureKind::ProcessError, "waitpid failed");
    }
    if (clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      return EvaluationResult::failed(FailureKind::Timeout, "simulator exceeded timeout");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    if (code == 127) {
      return EvaluationResult::failed(FailureKind::MissingBinary, "simulator command not found");
    }
    if (code != 0) {
      return EvaluationResult::failed(FailureKind::ProcessError,
                                      "simulator exited with status " + std::to_string(code));
    }
  } else {
    return EvaluationResult::failed(FailureKind::ProcessError, "simulator terminated by signal");
  }

  const fs::path metrics = dir.path / cfg_.metric_file;
  if (!fs::exists(metrics)) {
    return EvaluationResult::failed(FailureKind::MalformedOutput, "metric file missing");
  }
  try {
    return parse_metric_file(read_file(metrics));
  } catch (const MetricFormatError& e) {
    return EvaluationResult::failed(FailureKind::MalformedOutput, e.what());
  }
}

}  // namespace sizer
