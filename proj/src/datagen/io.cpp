// Copyright 2026 The GRNGC Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string_view>

#include "grngc/datagen.hpp"

namespace grngc {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path, bool has_header, char delimiter) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  const std::string where = path.string();

  Table table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    if (first) {
      width = cells.size();
      first = false;
      if (has_header) {
        for (auto c : cells) table.header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw ParseError(where, line_no, ParseError::npos,
                       "expected " + std::to_string(width) + " columns, found " +
                           std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string_view cell = cells[c];
      const char* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, row[c]);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(row[c])) {
        throw ParseError(where, line_no, c + 1,
                         "not a finite number: '" + std::string(cell) + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw ParseError(where, 1, ParseError::npos, "empty file");
  return table;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_rows(std::ofstream& out, const Eigen::MatrixXd& m, char delimiter) {
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) line += delimiter;
      line += format_value(m(r, c));
    }
    out << line << '\n';
  }
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  return out;
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, bool has_header, char delimiter) {
  Table table = read_table(path, has_header, delimiter);
  const std::size_t width = has_header ? table.header.size()
                                       : (table.rows.empty() ? 0 : table.rows[0].size());
  if (table.rows.size() < 2) {
    throw ParseError(path.string(), table.rows.size() + (has_header ? 1 : 0),
                     ParseError::npos, "need at least 2 data rows");
  }
  TimeSeries series;
  series.data = to_matrix(table.rows, width);
  series.names = std::move(table.header);
  return series;
}

void save_csv(const TimeSeries& series, const std::filesystem::path& path, char delimiter) {
  auto out = open_for_writing(path);
  if (!series.names.empty()) {
    std::string line;
    for (std::size_t i = 0; i < series.names.size(); ++i) {
      if (i) line += delimiter;
      line += series.names[i];
    }
    out << line << '\n';
  }
  write_rows(out, series.data, delimiter);
  if (!out) throw IoError(path.string(), "write failed");
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path, char delimiter) {
  Table table = read_table(path, false, delimiter);
  return to_matrix(table.rows, table.rows.front().size());
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                     char delimiter) {
  auto out = open_for_writing(path);
  write_rows(out, m, delimiter);
  if (!out) throw IoError(path.string(), "write failed");
}

AdjacencyTruth load_truth_csv(const std::filesystem::path& path, char delimiter) {
  const Eigen::MatrixXd m = load_matrix_csv(path, delimiter);
  if (m.rows() != m.cols()) {
    throw ParseError(path.string(), 1, ParseError::npos,
                     "truth matrix must be square, got " + std::to_string(m.rows()) + " x " +
                         std::to_string(m.cols()));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0 && m(r, c) != 1.0) {
        throw ParseError(path.string(), static_cast<std::size_t>(r) + 1,
                         static_cast<std::size_t>(c) + 1, "truth entries must be 0 or 1");
      }
    }
  }
  AdjacencyTruth truth;
  truth.matrix = m.array() != 0.0;
  return truth;
}

void save_truth_csv(const AdjacencyTruth& truth, const std::filesystem::path& path,
                    char delimiter) {
  auto out = open_for_writing(path);
  for (Eigen::Index r = 0; r < truth.matrix.rows(); ++r) {
    std::string line;
    for (Eigen::Index c = 0; c < truth.matrix.cols(); ++c) {
      if (c) line += delimiter;
      line += truth.matrix(r, c) ? '1' : '0';
    }
    out << line << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::pair<TimeSeries, Standardization> standardize(const TimeSeries& series) {
  const auto n = static_cast<double>(series.data.rows());
  Standardization tr;
  tr.mean = series.data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = series.data.rowwise() - tr.mean.transpose();
  tr.stddev = (centered.array().square().colwise().sum() / n).sqrt().transpose();
  for (Eigen::Index i = 0; i < tr.stddev.size(); ++i) {
    if (!(tr.stddev(i) > 0)) {
      const std::string name = series.names.empty()
                                   ? std::to_string(i)
                                   : series.names[static_cast<std::size_t>(i)];
      throw ValueError("standardize: column " + name + " has zero variance");
    }
  }
  TimeSeries out;
  out.names = series.names;
  out.data = centered.array().rowwise() / tr.stddev.transpose().array();
  return {std::move(out), std::move(tr)};
}

WindowedDataset make_windows(const TimeSeries& series, std::size_t lag) {
  if (lag < 1) throw ValueError("make_windows: lag must be >= 1");
  const std::size_t t_len = series.length();
  const std::size_t p = series.dim();
  if (t_len <= lag) {
    throw ValueError("make_windows: series length " + std::to_string(t_len) +
                     " must exceed lag " + std::to_string(lag));
  }
  const std::size_t n = t_len - lag;
  WindowedDataset ds;
  ds.lag = lag;
  ds.dim = p;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(lag * p));
  ds.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t l = 0; l < lag; ++l) {
      ds.inputs.block(row, static_cast<Eigen::Index>(l * p), 1, static_cast<Eigen::Index>(p)) =
          series.data.row(static_cast<Eigen::Index>(s + l));
    }
    ds.targets.row(row) = series.data.row(static_cast<Eigen::Index>(s + lag));
  }
  return ds;
}

}  // namespace grngc
