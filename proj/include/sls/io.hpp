#pragma once

#include <Eigen/Dense>

#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sls/lti_core.hpp"
#include "sls/sparsity.hpp"

namespace sls {

// Plain-text formats:
//   matrix:  header "rows cols", then rows lines of cols values
//   FIR:     header "rows cols start horizon", then (horizon - start + 1)
//            coefficients in spectral order, each row-major
//   mask:    R-pattern FIR followed by M-pattern FIR, entries 0/1
// Values are written with 17 significant digits so doubles round-trip exactly.

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 1 || cols < 1)
    throw std::runtime_error("read_matrix: bad header");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error("read_matrix: truncated data");
  return m;
}

inline void write_fir(std::ostream& os, const FirTransferMatrix& x) {
  x.validate();
  if (x.start < 0) throw std::invalid_argument("write_fir: negative start is not serializable");
  os << x.rows << ' ' << x.cols << ' ' << x.start << ' ' << x.horizon << '\n';
  os << std::setprecision(17);
  for (int k = x.start; k <= x.horizon; ++k) {
    const Eigen::MatrixXd& c = x.at(k);
    for (int i = 0; i < x.rows; ++i) {
      for (int j = 0; j < x.cols; ++j) {
        if (j) os << ' ';
        os << c(i, j);
      }
      os << '\n';
    }
  }
}

inline FirTransferMatrix read_fir(std::istream& is) {
  int rows = 0, cols = 0, start = 0, horizon = 0;
  if (!(is >> rows >> cols >> start >> horizon) || rows < 1 || cols < 1 || start < 0 ||
      horizon < start)
    throw std::runtime_error("read_fir: bad header");
  FirTransferMatrix x(rows, cols, start, horizon);
  for (int k = start; k <= horizon; ++k)
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (!(is >> x.at(k)(i, j))) throw std::runtime_error("read_fir: truncated data");
  return x;
}

inline void write_mask(std::ostream& os, const SparsityMask& mask) {
  mask.validate();
  auto patterns_to_fir = [&](const std::vector<BoolMatrix>& ps) {
    FirTransferMatrix f(static_cast<int>(ps[0].rows()), static_cast<int>(ps[0].cols()), 1,
                        mask.horizon);
    for (int k = 1; k <= mask.horizon; ++k)
      f.at(k) = ps[static_cast<size_t>(k - 1)].cast<double>();
    return f;
  };
  write_fir(os, patterns_to_fir(mask.patterns_R));
  write_fir(os, patterns_to_fir(mask.patterns_M));
}

inline SparsityMask read_mask(std::istream& is) {
  const FirTransferMatrix fr = read_fir(is);
  const FirTransferMatrix fm = read_fir(is);
  if (fr.start != 1 || fm.start != 1 || fr.horizon != fm.horizon)
    throw std::runtime_error("read_mask: patterns must share start 1 and a common horizon");
  std::vector<BoolMatrix> rs, ms;
  for (int k = 1; k <= fr.horizon; ++k) {
    rs.push_back(BoolMatrix(fr.at(k).array() != 0.0));
    ms.push_back(BoolMatrix(fm.at(k).array() != 0.0));
  }
  return SparsityMask(std::move(rs), std::move(ms));
}

template <typename T>
inline void write_text_file(const std::string& path, const T& value,
                            void (*writer)(std::ostream&, const T&)) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  writer(os, value);
}

inline void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m) {
  write_text_file(path, m, &write_matrix);
}

inline void write_fir_file(const std::string& path, const FirTransferMatrix& x) {
  write_text_file(path, x, &write_fir);
}

inline Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_matrix(is);
}

inline FirTransferMatrix read_fir_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_fir(is);
}

// Key-value configuration: one "key = value" per line, '#' starts a comment,
// blank lines ignored.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const size_t b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    if (out.count(key))
      throw std::runtime_error("config line " + std::to_string(line_no) + ": duplicate key " + key);
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> parse_key_values_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return parse_key_values(is);
}

inline double parse_double(const std::string& s, const std::string& key) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": expected a number, got '" + s + "'");
  }
  if (pos != s.size())
    throw std::runtime_error("config key " + key + ": trailing characters in '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& key) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": expected an integer, got '" + s + "'");
  }
  if (pos != s.size())
    throw std::runtime_error("config key " + key + ": trailing characters in '" + s + "'");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  throw std::runtime_error("config key " + key + ": expected a boolean, got '" + s + "'");
}

// Integer lists: comma-separated entries, each either a value or an inclusive
// range "a:b" (e.g. "2,5:8" -> 2 5 6 7 8).
inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  auto trim = [](std::string t) {
    const char* ws = " \t\r";
    const size_t b = t.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const size_t e = t.find_last_not_of(ws);
    return t.substr(b, e - b + 1);
  };
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    const size_t colon = tok.find(':');
    if (colon == std::string::npos) {
      out.push_back(parse_int(tok, key));
    } else {
      const int a = parse_int(tok.substr(0, colon), key);
      const int b = parse_int(tok.substr(colon + 1), key);
      if (b < a) throw std::runtime_error("config key " + key + ": descending range '" + tok + "'");
      for (int v = a; v <= b; ++v) out.push_back(v);
    }
  }
  if (out.empty()) throw std::runtime_error("config key " + key + ": empty list");
  return out;
}

}  // namespace sls
