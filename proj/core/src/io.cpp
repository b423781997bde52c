#include "fgflow/io.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fgflow {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

double parse_number(const std::string& field, int line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  while (ptr != last && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  if (ec != std::errc() || ptr != last) {
    throw ParseError("invalid number '" + field + "'", line);
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector json_to_vector(const json& a, int line) {
  if (!a.is_array()) throw ParseError("expected a numeric array", line);
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ParseError("expected a numeric array", line);
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

Matrix json_to_matrix(const json& rows, int line) {
  if (!rows.is_array() || rows.empty()) throw ParseError("expected a matrix", line);
  const size_t cols = rows[0].size();
  Matrix m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ParseError("ragged matrix rows", line);
    }
    for (size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

LabeledDataset read_dataset_csv(std::istream& is) {
  LabeledDataset data;
  std::string line;
  int lineno = 0;

  if (!std::getline(is, line)) throw ParseError("empty dataset", 1);
  ++lineno;
  const auto header = split_csv(strip_cr(line));
  if (header.size() < 2 || header[0] != "label") {
    throw ParseError("expected header 'label,f0,f1,...'", lineno);
  }
  const size_t m = header.size() - 1;

  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = strip_cr(line);
    if (stripped.empty()) continue;
    const auto fields = split_csv(stripped);
    if (fields.size() != m + 1) {
      throw ParseError("expected " + std::to_string(m + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    Vector x(static_cast<Eigen::Index>(m));
    for (size_t i = 0; i < m; ++i) {
      x(static_cast<Eigen::Index>(i)) = parse_number(fields[i + 1], lineno);
    }
    data.labels.push_back(fields[0]);
    data.features.push_back(std::move(x));
  }
  data.validate();
  return data;
}

LabeledDataset read_dataset_ndjson(std::istream& is) {
  LabeledDataset data;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = strip_cr(line);
    if (stripped.empty()) continue;
    json rec;
    try {
      rec = json::parse(stripped);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!rec.contains("label") || !rec.contains("x")) {
      throw ParseError("record needs 'label' and 'x'", lineno);
    }
    data.labels.push_back(rec["label"].is_string() ? rec["label"].get<std::string>()
                                                   : rec["label"].dump());
    data.features.push_back(json_to_vector(rec["x"], lineno));
  }
  data.validate();
  return data;
}

}  // namespace

LabeledDataset read_dataset(std::istream& is) {
  // sniff: ndjson starts with '{'
  int c = is.peek();
  while (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
    is.get();
    c = is.peek();
  }
  if (c == '{') return read_dataset_ndjson(is);
  return read_dataset_csv(is);
}

LabeledDataset read_dataset_file(const std::string& path) {
  auto is = open_input(path);
  return read_dataset(is);
}

void write_measure(std::ostream& os, const EmpiricalMeasure& measure) {
  for (int i = 0; i < measure.size(); ++i) {
    const Particle& z = measure.particles[static_cast<size_t>(i)];
    json rec;
    rec["x"] = vector_to_json(z.x);
    rec["mu"] = vector_to_json(z.mu);
    rec["sigma"] = matrix_to_json(z.sigma);
    if (measure.labeled()) rec["label"] = measure.labels[static_cast<size_t>(i)];
    os << rec.dump() << '\n';
  }
}

void write_measure_file(const std::string& path, const EmpiricalMeasure& measure) {
  auto os = open_output(path);
  write_measure(os, measure);
}

EmpiricalMeasure read_measure(std::istream& is) {
  EmpiricalMeasure measure;
  std::string line;
  int lineno = 0;
  bool any_label = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = strip_cr(line);
    if (stripped.empty()) continue;
    json rec;
    try {
      rec = json::parse(stripped);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!rec.contains("x") || !rec.contains("mu") || !rec.contains("sigma")) {
      throw ParseError("record needs 'x', 'mu' and 'sigma'", lineno);
    }
    Particle z{json_to_vector(rec["x"], lineno), json_to_vector(rec["mu"], lineno),
               json_to_matrix(rec["sigma"], lineno)};
    measure.particles.push_back(std::move(z));
    if (rec.contains("label")) {
      any_label = true;
      measure.labels.push_back(rec["label"].is_string() ? rec["label"].get<std::string>()
                                                        : rec["label"].dump());
    } else {
      measure.labels.emplace_back();
    }
  }
  if (!any_label) measure.labels.clear();
  measure.validate();
  return measure;
}

EmpiricalMeasure read_measure_file(const std::string& path) {
  auto is = open_input(path);
  return read_measure(is);
}

void write_moments(std::ostream& os, const ClassMoments& moments) {
  json out;
  out["n"] = moments.lifted_dim();
  json classes = json::array();
  for (const auto& entry : moments.classes) {
    json rec;
    rec["label"] = entry.label;
    rec["count"] = entry.count;
    rec["mu"] = vector_to_json(entry.mu);
    rec["sigma"] = matrix_to_json(entry.sigma);
    classes.push_back(std::move(rec));
  }
  out["classes"] = std::move(classes);
  os << out.dump(2) << '\n';
}

void write_moments_file(const std::string& path, const ClassMoments& moments) {
  auto os = open_output(path);
  write_moments(os, moments);
}

ClassMoments read_moments(std::istream& is) {
  json in;
  try {
    in = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid moments JSON: ") + e.what());
  }
  if (!in.contains("classes")) throw ParseError("moments file lacks 'classes'");
  ClassMoments moments;
  for (const json& rec : in["classes"]) {
    ClassMoments::Entry entry;
    entry.label = rec.at("label").get<std::string>();
    entry.count = rec.at("count").get<int>();
    entry.mu = json_to_vector(rec.at("mu"), 0);
    entry.sigma = json_to_matrix(rec.at("sigma"), 0);
    moments.classes.push_back(std::move(entry));
  }
  return moments;
}

ClassMoments read_moments_file(const std::string& path) {
  auto is = open_input(path);
  return read_moments(is);
}

void write_labels_csv(std::ostream& os, const std::vector<std::string>& labels) {
  os << "index,label\n";
  for (size_t i = 0; i < labels.size(); ++i) {
    os << i << ',' << labels[i] << '\n';
  }
}

void write_labels_csv_file(const std::string& path, const std::vector<std::string>& labels) {
  auto os = open_output(path);
  write_labels_csv(os, labels);
}

void write_trace_csv_file(const std::string& path, const FlowTrace& trace) {
  auto os = open_output(path);
  write_trace_csv(os, trace);
}

}  // namespace fgflow
