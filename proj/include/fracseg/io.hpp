#pragma once

// File formats.
//
//  grid   text header line "FSEG1 <rows> <cols>\n" followed by rows*cols
//         little-endian float64 values, row-major.
//  mask   PGM P5, maxval 255, labels written as {0, 255}; or raw bytes.
//  trace  CSV with header iter,objective,gap,gap_normalized,seconds.
//  config one "key = value" per line; '#' starts a comment; blank lines ignored.

#include <filesystem>
#include <map>
#include <string>

#include "fracseg/grid.hpp"
#include "fracseg/solvers.hpp"
#include "fracseg/wavelet.hpp"

namespace fracseg::io {

void write_grid(const std::filesystem::path& path, const ScalarField& x);
ScalarField read_grid(const std::filesystem::path& path);

/// One grid per octave ("<stem>_j<octave>.f64") plus "<stem>.txt" listing
/// rows, cols, octaves, domain and clamp count.
void write_pyramid(const std::filesystem::path& dir, const std::string& stem,
                   const LeaderPyramid& pyr);

void write_mask_pgm(const std::filesystem::path& path, const LabelMap& mask);
void write_mask_raw(const std::filesystem::path& path, const LabelMap& mask);
/// Reads a PGM (P2 or P5, maxval <= 65535) as gray levels.
ScalarField read_pgm(const std::filesystem::path& path);
/// Labels from a PGM: pixels above half of maxval are 1.
LabelMap read_mask_pgm(const std::filesystem::path& path);

/// FSEG1 grids by magic, otherwise PGM.
ScalarField read_image(const std::filesystem::path& path);

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace);

using KeyValues = std::map<std::string, std::string>;
KeyValues parse_config(const std::string& text);
KeyValues read_config(const std::filesystem::path& path);

}  // namespace fracseg::io
