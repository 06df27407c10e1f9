#include "mesh/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mesh {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T to_number(std::string_view s, std::string_view key) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("bad value for '" + std::string(key) + "': " + std::string(s));
  }
  return v;
}

std::string join(const std::vector<uint64_t>& values) {
  std::ostringstream os;
  for (size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Expectation parse_expectation(std::string_view text) {
  Expectation e;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("expected key=value: " + std::string(line));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "kind") {
      e.expects_kind = true;
      if (value != "none") {
        e.kind = parse_violation_kind(value);
        if (!e.kind) throw std::invalid_argument("unknown violation kind " + std::string(value));
      }
    } else if (key == "function") {
      e.function = std::string(value);
    } else if (key == "instr") {
      e.instr = to_number<int>(value, key);
    } else if (key == "outputs") {
      std::vector<uint64_t> out;
      size_t pos = 0;
      while (pos < value.size()) {
        size_t comma = value.find(',', pos);
        if (comma == std::string_view::npos) comma = value.size();
        out.push_back(to_number<uint64_t>(trim(value.substr(pos, comma - pos)), key));
        pos = comma + 1;
      }
      e.outputs = std::move(out);
    } else if (key == "exit") {
      if (value == "normal") {
        e.exit = ExitKind::Normal;
      } else if (value == "aborted-on-violation") {
        e.exit = ExitKind::AbortedOnViolation;
      } else if (value == "fault") {
        e.exit = ExitKind::Fault;
      } else {
        throw std::invalid_argument("unknown exit kind " + std::string(value));
      }
    } else if (key == "tag_bits") {
      e.tag_bits = to_number<unsigned>(value, key);
    } else if (key == "wrap") {
      e.wrap = to_number<int>(value, key) != 0;
    } else {
      throw std::invalid_argument("unknown expectation key " + std::string(key));
    }
  }
  return e;
}

RunConfig fixture_config(const Expectation& e, const CorpusOptions& options) {
  RunConfig config;
  config.tags = TagConfig(e.tag_bits);
  config.wrap = e.wrap;
  config.safe_heap_size = options.safe_heap_size;
  config.oracle = options.oracle;
  return config;
}

FixtureResult run_fixture(const std::filesystem::path& mir_path, const CorpusOptions& options) {
  FixtureResult result;
  result.name = mir_path.stem().string();
  std::filesystem::path expect_path = mir_path;
  expect_path.replace_extension(".expect");

  std::vector<std::string> problems;
  try {
    const Expectation e = parse_expectation(read_file(expect_path));
    const mir::Program program = mir::parse(read_file(mir_path));
    InstrumentOptions iopt;
    iopt.enable_check_removal = !options.no_opt;
    result.report = run(program, fixture_config(e, options), iopt);
    const ExecutionReport& r = result.report;

    const ReportedViolation* first = r.violations.empty() ? nullptr : &r.violations.front();
    if (e.expects_kind) {
      std::optional<ViolationKind> got;
      if (first) got = first->violation.kind;
      if (got != e.kind) {
        problems.push_back("kind " + std::string(got ? to_string(*got) : "none") + " != " +
                           std::string(e.kind ? to_string(*e.kind) : "none"));
      }
    }
    if (e.function && (!first || first->function != *e.function)) {
      problems.push_back("function " + (first ? first->function : std::string("-")) +
                         " != " + *e.function);
    }
    if (e.instr && (!first || first->instr_index != *e.instr)) {
      problems.push_back("instr " + (first ? std::to_string(first->instr_index) : std::string("-")) +
                         " != " + std::to_string(*e.instr));
    }
    if (e.outputs && r.outputs != *e.outputs) {
      problems.push_back("outputs [" + join(r.outputs) + "] != [" + join(*e.outputs) + "]");
    }
    if (e.exit && r.exit != *e.exit) {
      problems.push_back("exit " + std::string(to_string(r.exit)) + " != " +
                         std::string(to_string(*e.exit)));
    }
    if (r.oracle && r.oracle->unexpected > 0) {
      problems.push_back(std::to_string(r.oracle->unexpected) + " unexpected oracle disagreements");
    }
  } catch (const std::exception& ex) {
    problems.push_back(ex.what());
  }

  result.pass = problems.empty();
  for (size_t i = 0; i < problems.size(); ++i) result.detail += (i ? "; " : "") + problems[i];
  return result;
}

std::vector<FixtureResult> run_corpus(const std::filesystem::path& dir,
                                      const CorpusOptions& options) {
  std::vector<std::filesystem::path> fixtures;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".mir") continue;
    std::filesystem::path sidecar = entry.path();
    sidecar.replace_extension(".expect");
    if (std::filesystem::exists(sidecar)) fixtures.push_back(entry.path());
  }
  std::sort(fixtures.begin(), fixtures.end());
  std::vector<FixtureResult> results;
  for (const auto& f : fixtures) results.push_back(run_fixture(f, options));
  return results;
}

}  // namespace mesh
