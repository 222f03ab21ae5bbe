// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "phasevae/io/export.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phasevae/angles.h"
#include "phasevae/autodiff/archive.h"
#include "phasevae/error.h"

namespace phasevae {
namespace io {

using GrayImage = Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

Eigen::ArrayXXd LogMagnitudeDb(const Eigen::ArrayXXd &mag) {
  Eigen::ArrayXXd db = Eigen::ArrayXXd::Constant(mag.rows(), mag.cols(), kDbFloor);
  const double peak = mag.size() > 0 ? mag.maxCoeff() : 0.0;
  if (!(peak > 0.0)) return db;
  for (Eigen::Index i = 0; i < mag.size(); ++i) {
    if (mag(i) > 0.0) db(i) = std::clamp(20.0 * std::log10(mag(i) / peak), kDbFloor, 0.0);
  }
  return db;
}

GrayImage ToGray(const Eigen::ArrayXXd &values, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("gray mapping needs hi > lo");
  GrayImage g(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double t = (std::clamp(values(i), lo, hi) - lo) / (hi - lo);
    g(i) = static_cast<uint8_t>(std::lround(255.0 * t));
  }
  return g;
}

std::string EncodePgm(const GrayImage &gray) {
  std::string out = "P5\n" + std::to_string(gray.cols()) + " " + std::to_string(gray.rows()) +
                    "\n255\n";
  out.reserve(out.size() + gray.size());
  for (Eigen::Index r = gray.rows() - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < gray.cols(); ++c) out.push_back(static_cast<char>(gray(r, c)));
  }
  return out;
}

void WritePgm(const std::string &path, const GrayImage &gray) {
  ad::WriteFileAtomic(path, EncodePgm(gray));
}

std::string EncodeCsv(const Eigen::ArrayXXd &values) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(r, c));
      if (c > 0) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

void WriteCsv(const std::string &path, const Eigen::ArrayXXd &values) {
  ad::WriteFileAtomic(path, EncodeCsv(values));
}

Eigen::ArrayXXd ParseCsv(const std::string &text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception &) {
        throw DataError("CSV: cannot parse '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw DataError("CSV: ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::ArrayXXd out(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(r, c) = rows[r][c];
  }
  return out;
}

Eigen::ArrayXXd ReadCsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCsv(ss.str());
}

std::vector<std::string> ExportPanels(const std::string &out_dir, const std::string &prefix,
                                      const dsp::MagnitudeSpectrogram &mag,
                                      const dsp::PhaseSpectrogram &phase) {
  const Eigen::Index f = mag.values.rows(), n = mag.values.cols();
  if (phase.values.rows() != f || phase.values.cols() != n) {
    throw InvalidArgument("export: magnitude/phase shape mismatch");
  }
  std::filesystem::create_directories(out_dir);
  constexpr double kP = kPi<double>;
  const dsp::PhaseDerivatives d = dsp::Derivatives(phase);
  Eigen::ArrayXXd gd_image = Eigen::ArrayXXd::Zero(f, n);
  gd_image.topRows(f - 1) = d.grd;
  Eigen::ArrayXXd if_image = Eigen::ArrayXXd::Zero(f, n);
  if_image.rightCols(n - 1) = d.ifr;

  struct Panel {
    const char *name;
    Eigen::ArrayXXd csv;
    GrayImage image;
  };
  const Eigen::ArrayXXd db = LogMagnitudeDb(mag.values);
  const Panel panels[] = {
      {"logmag", db, ToGray(db, kDbFloor, 0.0)},
      {"phase", phase.values, ToGray(phase.values, -kP, kP)},
      {"gd", d.grd, ToGray(gd_image, -kP, kP)},
      {"if", d.ifr, ToGray(if_image, -kP, kP)},
  };
  std::vector<std::string> written;
  for (const auto &p : panels) {
    const std::string base = (std::filesystem::path(out_dir) / (prefix + "_" + p.name)).string();
    WritePgm(base + ".pgm", p.image);
    WriteCsv(base + ".csv", p.csv);
    written.push_back(base + ".pgm");
    written.push_back(base + ".csv");
  }
  return written;
}

}  // namespace io
}  // namespace phasevae
