#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "entgeo/algebra.hpp"
#include "entgeo/entropy.hpp"
#include "entgeo/expfam.hpp"
#include "entgeo/families.hpp"
#include "entgeo/spectral.hpp"

namespace entgeo::io {

using json = nlohmann::json;

inline constexpr const char* kSchema = "entgeo/1";

/// Malformed input: wrong shape, missing field, unparsable number.
class InputError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Parsing

inline AlgebraSpec parse_algebra(const json& j) {
  if (!j.is_array() || j.empty()) throw InputError("\"blocks\" must be a non-empty array of positive integers");
  std::vector<int> blocks;
  for (const auto& b : j) {
    if (!b.is_number_integer() || b.get<int>() < 1) throw InputError("block sizes must be positive integers");
    blocks.push_back(b.get<int>());
  }
  return AlgebraSpec(blocks);
}

namespace detail {

inline std::complex<double> parse_entry(const json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
    return {e[0].get<double>(), e[1].get<double>()};
  throw InputError("matrix entries must be numbers or [re, im] pairs");
}

inline std::vector<double> parse_diag_string(const std::string& s) {
  static const std::regex re(R"(^\s*diag\s*\((.*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw InputError("unrecognized element string '" + s + "', expected diag(...)");
  std::vector<double> out;
  std::stringstream ss(m[1].str());
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw InputError("bad number '" + tok + "' in '" + s + "'");
    }
    if (tok.find_first_not_of(" \t", used) != std::string::npos) throw InputError("bad number '" + tok + "' in '" + s + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Hermitian element: "diag(a, b, ...)" over all n diagonal entries, or a list
/// of blocks, each a list of rows whose entries are numbers or [re, im] pairs.
inline HermElem parse_elem(const json& j, const AlgebraSpec& alg) {
  if (j.is_string()) {
    const auto d = detail::parse_diag_string(j.get<std::string>());
    if (static_cast<int>(d.size()) != alg.dim())
      throw InputError("diag(...) has " + std::to_string(d.size()) + " entries, algebra dimension is " +
                       std::to_string(alg.dim()));
    return HermElem::diagonal(alg, d);
  }
  if (!j.is_array() || j.size() != alg.num_blocks())
    throw InputError("element must be diag(...) or a list of " + std::to_string(alg.num_blocks()) + " blocks");
  std::vector<Eigen::MatrixXcd> blocks;
  for (std::size_t b = 0; b < alg.num_blocks(); ++b) {
    const int k = alg.block(b);
    const json& jb = j[b];
    if (!jb.is_array() || static_cast<int>(jb.size()) != k) throw InputError("block " + std::to_string(b) + " must have " + std::to_string(k) + " rows");
    Eigen::MatrixXcd m(k, k);
    for (int r = 0; r < k; ++r) {
      if (!jb[r].is_array() || static_cast<int>(jb[r].size()) != k)
        throw InputError("block " + std::to_string(b) + " row " + std::to_string(r) + " must have " + std::to_string(k) + " entries");
      for (int c = 0; c < k; ++c) m(r, c) = detail::parse_entry(jb[r][c]);
    }
    if ((m - m.adjoint()).norm() > 1e-9 * std::max(1.0, m.norm()))
      throw InputError("block " + std::to_string(b) + " is not Hermitian");
    blocks.push_back(std::move(m));
  }
  return HermElem(alg, std::move(blocks));
}

inline State parse_state(const json& j, const AlgebraSpec& alg) {
  try {
    return State(parse_elem(j, alg));
  } catch (const InputError&) {
    throw;
  } catch (const DomainError& e) {
    throw InputError(std::string("invalid state: ") + e.what());
  }
}

inline Eigen::VectorXd parse_vector(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string("\"") + what + "\" must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string("\"") + what + "\" must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

/// A family from {"family": name} or {"blocks": [...], "u": [...], "theta0": elem?}.
inline ExpFamilySpec parse_family(const json& j) {
  if (j.contains("family")) {
    if (!j["family"].is_string()) throw InputError("\"family\" must be a string");
    try {
      return families::by_name(j["family"].get<std::string>());
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
  }
  const AlgebraSpec alg = parse_algebra(require(j, "blocks"));
  const json& ju = require(j, "u");
  if (!ju.is_array()) throw InputError("\"u\" must be an array of elements");
  std::vector<HermElem> u;
  for (const auto& e : ju) u.push_back(parse_elem(e, alg));
  const HermElem theta0 = j.contains("theta0") ? parse_elem(j["theta0"], alg) : HermElem::zero(alg);
  try {
    return ExpFamilySpec(theta0, std::move(u));
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

/// Wraps bare diag(...) tokens outside strings in quotes, so that hand-written
/// inputs like {"u": [diag(1,0)]} parse.
inline std::string quote_bare_diag(const std::string& text) {
  std::string out;
  out.reserve(text.size() + 8);
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) out += text[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (text.compare(i, 5, "diag(") == 0) {
      const std::size_t close = text.find(')', i);
      if (close == std::string::npos) throw InputError("unterminated diag(...)");
      out += '"' + text.substr(i, close - i + 1) + '"';
      i = close;
      continue;
    }
    out += c;
  }
  return out;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(quote_bare_diag(text));
  } catch (const json::parse_error& e) {
    throw InputError("JSON parse error in " + what + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Writing

/// Shortest exact form is not used on purpose: every double is printed with
/// 17 significant digits so identical runs give identical bytes.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

inline void write_json(std::ostream& os, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        os << json(it.key()).dump() << ':';
        write_json(os, it.value());
      }
      os << '}';
      break;
    }
    case json::value_t::array: {
      os << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',';
        write_json(os, j[i]);
      }
      os << ']';
      break;
    }
    case json::value_t::number_float: os << format_double(j.get<double>()); break;
    default: os << j.dump(); break;
  }
}

inline std::string to_string(const json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const ExtReal& x) { return x.is_finite() ? json(x.value()) : json("inf"); }

/// Blocks of rows; entries are numbers when the block is real, [re, im] otherwise.
inline json to_json(const HermElem& a) {
  json out = json::array();
  for (const auto& b : a.blocks()) {
    const bool real = b.imag().isZero(0.0);
    json jb = json::array();
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < b.cols(); ++c) {
        if (real) row.push_back(b(r, c).real());
        else row.push_back(json::array({b(r, c).real(), b(r, c).imag()}));
      }
      jb.push_back(std::move(row));
    }
    out.push_back(std::move(jb));
  }
  return out;
}

inline json rank_profile_json(const Projection& p) { return json(p.rank_profile()); }

inline json envelope(const std::string& command) { return json{{"schema", kSchema}, {"command", command}}; }

/// 17 significant digits; inf and nan spelled out.
inline std::string format_csv(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

/// Comma separated, header row, fixed 17-digit numbers.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  void row(const std::vector<double>& values) {
    if (values.size() != cols_) throw Error("CSV row has wrong number of columns");
    for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << format_csv(values[i]);
    os_ << '\n';
    ++rows_;
  }
  std::size_t rows() const { return rows_; }

 private:
  std::ostream& os_;
  std::size_t cols_;
  std::size_t rows_ = 0;
};

}  // namespace entgeo::io
