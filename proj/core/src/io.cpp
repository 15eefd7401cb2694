#include "gsum/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace gsum {

using nlohmann::json;

namespace {

std::string located(const std::string& source, std::size_t line, const std::string& message) {
  if (line == 0) return source + ": " + message;
  return source + ":" + std::to_string(line) + ": " + message;
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw InputError(source, line_of_byte(text, at), "invalid JSON: " + msg);
  }
}

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& what) {
  throw InputError(source, 0, "at " + path + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& source, const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(source, path, std::string("missing key \"") + key + "\"");
  return *it;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& source,
                    const std::string& path) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) fail(source, path, "unknown key \"" + k + "\"");
  }
}

double number(const json& v, const std::string& source, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(source, path, "expected a number");
}

std::size_t index_value(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_number_unsigned()) fail(source, path, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

template <class F>
auto wrap_domain(const std::string& source, F&& f) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const DomainError& e) {
    throw InputError(source, 0, e.what());
  }
}

json vec_json(const Eigen::VectorXd& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

Eigen::VectorXd vec_from(const json& a, const std::string& source, const std::string& path) {
  if (!a.is_array()) fail(source, path, "expected an array of numbers");
  Eigen::VectorXd x(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = number(a[i], source, path + "/" + std::to_string(i));
  }
  return x;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::vector<double>> parse_rows(const std::string& text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = trim(raw);
    if (body.empty() || body.front() == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const auto cell = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      double value = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw InputError(source, line, "column " + std::to_string(row.size() + 1) + ": '" +
                                           std::string(cell) + "' is not a number");
      }
      if (!std::isfinite(value)) throw InputError(source, line, "non-finite value");
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw InputError(source, line, "expected " + std::to_string(width) + " columns, found " +
                                         std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(source, 0, "no data rows");
  return rows;
}

}  // namespace

InputError::InputError(const std::string& source, std::size_t line, const std::string& message)
    : DomainError(located(source, line, message)), line_(line) {}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DomainError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DomainError("cannot rename into " + path);
  }
}

DiscreteDistribution1D parse_distribution_1d(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) fail(source, "/", "expected an object");
  reject_unknown(j, {"atoms"}, source, "/");
  const json& atoms = member(j, "atoms", source, "/");
  if (!atoms.is_array() || atoms.empty()) fail(source, "/atoms", "expected a non-empty array");
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string path = "/atoms/" + std::to_string(i);
    if (!atoms[i].is_object()) fail(source, path, "expected an object");
    reject_unknown(atoms[i], {"x", "p"}, source, path);
    const double x = number(member(atoms[i], "x", source, path), source, path + "/x");
    const double p = number(member(atoms[i], "p", source, path), source, path + "/p");
    out.push_back({x, p});
  }
  return wrap_domain(source, [&] { return DiscreteDistribution1D(std::move(out)); });
}

DiscreteDistributionVec parse_distribution_vec(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) fail(source, "/", "expected an object");
  reject_unknown(j, {"dim", "atoms"}, source, "/");
  const std::size_t dim = index_value(member(j, "dim", source, "/"), source, "/dim");
  const json& atoms = member(j, "atoms", source, "/");
  if (!atoms.is_array() || atoms.empty()) fail(source, "/atoms", "expected a non-empty array");
  std::vector<AtomVec> out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string path = "/atoms/" + std::to_string(i);
    if (!atoms[i].is_object()) fail(source, path, "expected an object");
    reject_unknown(atoms[i], {"x", "p"}, source, path);
    Eigen::VectorXd x = vec_from(member(atoms[i], "x", source, path), source, path + "/x");
    if (static_cast<std::size_t>(x.size()) != dim) {
      fail(source, path + "/x", "expected " + std::to_string(dim) + " coordinates");
    }
    const double p = number(member(atoms[i], "p", source, path), source, path + "/p");
    out.push_back({std::move(x), p});
  }
  return wrap_domain(source, [&] { return DiscreteDistributionVec(dim, std::move(out)); });
}

std::string to_json(const DiscreteDistribution1D& d) {
  json atoms = json::array();
  for (const auto& a : d.atoms()) atoms.push_back(json{{"x", a.x}, {"p", a.p}});
  return json{{"atoms", atoms}}.dump(2) + "\n";
}

std::string to_json(const DiscreteDistributionVec& d) {
  json atoms = json::array();
  for (const auto& a : d.atoms()) atoms.push_back(json{{"x", vec_json(a.x)}, {"p", a.p}});
  json out;
  out["dim"] = d.dim();
  out["atoms"] = atoms;
  return out.dump(2) + "\n";
}

std::vector<Eigen::VectorXd> parse_vectors_csv(const std::string& text, const std::string& source) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& row : parse_rows(text, source)) {
    out.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  return out;
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text, const std::string& source) {
  const auto rows = parse_rows(text, source);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

std::string vectors_to_csv(const std::vector<Eigen::VectorXd>& v) {
  std::string out;
  char buf[64];
  for (const auto& x : v) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (i) out += ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, x[i]);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

std::vector<Interval> parse_intervals(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) fail(source, "/", "expected an object");
  reject_unknown(j, {"intervals"}, source, "/");
  const json& list = member(j, "intervals", source, "/");
  if (!list.is_array() || list.empty()) fail(source, "/intervals", "expected a non-empty array");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "/intervals/" + std::to_string(i);
    if (!list[i].is_array() || list[i].size() != 2) fail(source, path, "expected [lo, hi]");
    const double lo = number(list[i][0], source, path + "/0");
    const double hi = number(list[i][1], source, path + "/1");
    if (!(lo <= hi)) fail(source, path, "lo must not exceed hi");
    out.push_back({lo, hi});
  }
  return out;
}

std::string to_json(const PartitionFile& f) {
  const auto& r = f.result;
  json vectors = json::array();
  for (const auto& x : f.vectors) vectors.push_back(vec_json(x));
  json out;
  out["k"] = r.k;
  out["strategy"] = to_string(r.strategy);
  out["certified"] = r.certified;
  out["failure"] = r.failure;
  out["norm_bound"] = r.norm_bound;
  out["size_low"] = r.size_low;
  out["size_high"] = r.size_high;
  out["parts"] = r.parts;
  out["sizes"] = r.sizes;
  out["per_part_norm"] = r.per_part_norm;
  out["vectors"] = vectors;
  return out.dump(2) + "\n";
}

PartitionFile parse_partition(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) fail(source, "/", "expected an object");
  reject_unknown(j, {"k", "strategy", "certified", "failure", "norm_bound", "size_low", "size_high", "parts",
                     "sizes", "per_part_norm", "vectors"},
                 source, "/");
  PartitionFile f;
  auto& r = f.result;
  r.k = index_value(member(j, "k", source, "/"), source, "/k");
  const json& strategy = member(j, "strategy", source, "/");
  if (!strategy.is_string()) fail(source, "/strategy", "expected a string");
  r.strategy = wrap_domain(source, [&] { return parse_strategy(strategy.get<std::string>()); });
  const json& cert = member(j, "certified", source, "/");
  if (!cert.is_boolean()) fail(source, "/certified", "expected a boolean");
  r.certified = cert.get<bool>();
  const json& failure = member(j, "failure", source, "/");
  if (!failure.is_string()) fail(source, "/failure", "expected a string");
  r.failure = failure.get<std::string>();
  r.norm_bound = number(member(j, "norm_bound", source, "/"), source, "/norm_bound");
  r.size_low = number(member(j, "size_low", source, "/"), source, "/size_low");
  r.size_high = number(member(j, "size_high", source, "/"), source, "/size_high");
  const json& parts = member(j, "parts", source, "/");
  if (!parts.is_array()) fail(source, "/parts", "expected an array");
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::string path = "/parts/" + std::to_string(p);
    if (!parts[p].is_array()) fail(source, path, "expected an array of indices");
    std::vector<std::size_t> part;
    for (std::size_t q = 0; q < parts[p].size(); ++q) {
      part.push_back(index_value(parts[p][q], source, path + "/" + std::to_string(q)));
    }
    r.parts.push_back(std::move(part));
  }
  const json& sizes = member(j, "sizes", source, "/");
  if (!sizes.is_array()) fail(source, "/sizes", "expected an array");
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    r.sizes.push_back(index_value(sizes[p], source, "/sizes/" + std::to_string(p)));
  }
  const json& norms = member(j, "per_part_norm", source, "/");
  if (!norms.is_array()) fail(source, "/per_part_norm", "expected an array");
  for (std::size_t p = 0; p < norms.size(); ++p) {
    r.per_part_norm.push_back(number(norms[p], source, "/per_part_norm/" + std::to_string(p)));
  }
  const json& vectors = member(j, "vectors", source, "/");
  if (!vectors.is_array()) fail(source, "/vectors", "expected an array");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    f.vectors.push_back(vec_from(vectors[i], source, "/vectors/" + std::to_string(i)));
  }
  return f;
}

}  // namespace gsum
