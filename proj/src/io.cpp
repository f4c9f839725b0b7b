#include "likstab/errors.hpp"
#include "likstab/models.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace likstab {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("data file '" + path + "' is empty");
  const std::size_t cols = split_fields(line).size();
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    for (const auto& f : fields) {
      const std::string t = trim(f);
      try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": '" + t + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  MatrixXd m(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return Dataset(std::move(m));
}

void write_csv(const std::string& path, const Dataset& data, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (int j = 0; j < data.columns(); ++j) {
    if (j) out << ',';
    out << (static_cast<std::size_t>(j) < header.size() ? header[j] : "y" + std::to_string(j + 1));
  }
  out << '\n' << std::setprecision(17);
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.columns(); ++j) {
      if (j) out << ',';
      out << data.obs(i, j);
    }
    out << '\n';
  }
}

}  // namespace likstab
