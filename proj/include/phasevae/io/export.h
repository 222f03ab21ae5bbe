// Copyright 2026 The phasevae Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Spectrogram panels as 8-bit binary PGM (P5) images and CSV matrices.
//
// Gray mapping: log-magnitude is 20 log10(a / max a) dB clipped to [-80, 0]
// and mapped linearly to [0, 255] (an all-zero magnitude is -80 dB
// everywhere); angles map linearly from [-pi, pi] to [0, 255], so angle 0 is
// gray 128. Values are rounded to the nearest level.
//
// Images are N pixels wide and F pixels high with the highest bin on the top
// row. The group delay ((F-1) x N) and instantaneous frequency (F x (N-1))
// images are padded to F x N with angle 0 in the missing top row or first
// column; their CSV files hold the unpadded matrices. CSV rows are frequency
// bins, columns frames.

#ifndef PHASEVAE_IO_EXPORT_H_
#define PHASEVAE_IO_EXPORT_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasevae/dsp.h"

namespace phasevae {
namespace io {

inline constexpr double kDbFloor = -80.0;

Eigen::ArrayXXd LogMagnitudeDb(const Eigen::ArrayXXd &mag);
// Linear map of [lo, hi] to gray levels 0..255 with clipping.
Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic> ToGray(const Eigen::ArrayXXd &values,
                                                             double lo, double hi);

// `gray` is F x N; written N wide, F high, bin F-1 on the first row.
std::string EncodePgm(const Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic> &gray);
void WritePgm(const std::string &path,
              const Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic> &gray);

std::string EncodeCsv(const Eigen::ArrayXXd &values);
void WriteCsv(const std::string &path, const Eigen::ArrayXXd &values);
// Throws DataError on ragged rows or unparsable numbers.
Eigen::ArrayXXd ParseCsv(const std::string &text);
Eigen::ArrayXXd ReadCsv(const std::string &path);

// Writes <prefix>_{logmag,phase,gd,if}.{pgm,csv} into `out_dir` and returns
// the written paths.
std::vector<std::string> ExportPanels(const std::string &out_dir, const std::string &prefix,
                                      const dsp::MagnitudeSpectrogram &mag,
                                      const dsp::PhaseSpectrogram &phase);

}  // namespace io
}  // namespace phasevae

#endif  // PHASEVAE_IO_EXPORT_H_
