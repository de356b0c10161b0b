#include "io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ifa::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_int(const std::string& text, int& value) {
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  return res.ec == std::errc() && res.ptr == end;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Eigen::VectorXd json_vector(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be a list of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(what + " must be a list of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_matrix(const Json& j, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be a list of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = json_vector(j[r], what);
    if (row.size() != cols) throw InputError(what + ": row " + std::to_string(r + 1) + " has the wrong length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

ResponseTable read_responses_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  ResponseTable table;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  table.item_names = split(line);
  if (table.item_names.empty()) throw InputError(path + ": header has no item names");
  const auto j = static_cast<Eigen::Index>(table.item_names.size());

  std::vector<std::vector<int>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != j) {
      throw InputError(path + ": row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) +
                       ") has " + std::to_string(cells.size()) + " cells, expected " + std::to_string(j));
    }
    std::vector<int> row(static_cast<std::size_t>(j));
    for (Eigen::Index c = 0; c < j; ++c) {
      const std::string& cell = cells[static_cast<std::size_t>(c)];
      int value = 0;
      if (cell == "NA") {
        value = kMissing;
      } else if (!parse_int(cell, value) || value < 0) {
        throw InputError(path + ": row " + std::to_string(rows.size() + 1) + ", column " + std::to_string(c + 1) +
                         " ('" + table.item_names[static_cast<std::size_t>(c)] + "'): '" + cell +
                         "' is not a non-negative integer or NA");
      }
      row[static_cast<std::size_t>(c)] = value;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  table.responses.resize(static_cast<Eigen::Index>(rows.size()), j);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < j; ++c) table.responses(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return table;
}

void write_responses_csv(const std::string& path, const std::vector<std::string>& item_names,
                         const Eigen::MatrixXi& responses) {
  std::string out;
  for (std::size_t c = 0; c < item_names.size(); ++c) {
    if (c > 0) out += ',';
    out += item_names[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < responses.rows(); ++r) {
    for (Eigen::Index c = 0; c < responses.cols(); ++c) {
      if (c > 0) out += ',';
      const int v = responses(r, c);
      out += v == kMissing ? std::string("NA") : std::to_string(v);
    }
    out += '\n';
  }
  write_text(path, out);
}

QMatrix read_q_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open Q-matrix file '" + path + "'");
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<int> row;
    for (const std::string& cell : split(line)) {
      int v = 0;
      if (!parse_int(cell, v) || (v != 0 && v != 1)) {
        throw InputError(path + ": row " + std::to_string(rows.size() + 1) + ": '" + cell + "' is not 0 or 1");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError(path + ": row " + std::to_string(rows.size() + 1) + " has a different length");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": empty Q-matrix");
  Eigen::MatrixXi q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return QMatrix(q);
}

std::string parameters_to_json(const ParameterFile& params) {
  Json root;
  root["estimator"] = params.estimator;
  root["model"] = std::string(to_string(params.model.kind));
  root["link"] = std::string(to_string(params.model.link));
  root["k"] = params.model.k;
  root["n_persons"] = params.thetas.rows();
  root["n_items"] = params.items.size();
  root["seed"] = params.seed;
  root["converged"] = params.converged;
  root["iterations"] = params.iterations;
  root["correlation"] = matrix_json(params.correlation);
  Json items = Json::array();
  for (std::size_t j = 0; j < params.items.size(); ++j) {
    Json item;
    item["item"] = j < params.item_names.size() ? params.item_names[j] : "item" + std::to_string(j + 1);
    item["categories"] = params.items[j].categories();
    item["intercepts"] = vector_json(params.items[j].intercepts);
    item["loadings"] = vector_json(params.items[j].loadings);
    items.push_back(std::move(item));
  }
  root["items"] = std::move(items);
  root["thetas"] = matrix_json(params.thetas);
  return root.dump(2) + "\n";
}

ParameterFile read_parameters(const std::string& path) {
  Json root;
  try {
    root = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw InputError(path + ": invalid JSON (" + e.what() + ")");
  }
  ParameterFile p;
  try {
    p.estimator = root.value("estimator", std::string("unknown"));
    p.model.kind = parse_model_kind(root.at("model").get<std::string>());
    p.model.link = parse_link(root.at("link").get<std::string>());
    p.model.k = root.at("k").get<int>();
    if (p.model.k < 1) throw InputError(path + ": k must be positive");
    p.seed = root.value("seed", std::uint64_t{0});
    p.converged = root.value("converged", true);
    p.iterations = root.value("iterations", 0);
    p.correlation = json_matrix(root.at("correlation"), p.model.k, path + ": correlation");
    for (const Json& item : root.at("items")) {
      ItemParams params;
      params.kind = p.model.kind;
      params.intercepts = json_vector(item.at("intercepts"), path + ": intercepts");
      params.loadings = json_vector(item.at("loadings"), path + ": loadings");
      if (params.factors() != p.model.k) throw InputError(path + ": an item has the wrong number of loadings");
      validate_item(params);
      p.item_names.push_back(item.value("item", std::string()));
      p.items.push_back(std::move(params));
    }
    p.thetas = json_matrix(root.at("thetas"), p.model.k, path + ": thetas");
  } catch (const Json::exception& e) {
    throw InputError(path + ": missing or malformed field (" + e.what() + ")");
  }
  return p;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace ifa::cli
