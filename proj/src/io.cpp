#include "fracseg/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fracseg/error.hpp"

namespace fracseg::io {

namespace {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Next PGM header token, skipping whitespace and comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const ScalarField& x) {
  auto out = open_out(path);
  out << "FSEG1 " << x.rows() << ' ' << x.cols() << '\n';
  out.write(reinterpret_cast<const char*>(x.data().data()),
            static_cast<std::streamsize>(x.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

ScalarField read_grid(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  std::size_t rows = 0, cols = 0;
  hs >> magic >> rows >> cols;
  if (magic != "FSEG1" || rows == 0 || cols == 0) {
    throw IoError(path.string() + ": not an FSEG1 grid");
  }
  std::vector<double> data(rows * cols);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double))) {
    throw IoError(path.string() + ": truncated grid");
  }
  return ScalarField(rows, cols, std::move(data));
}

void write_pyramid(const std::filesystem::path& dir, const std::string& stem,
                   const LeaderPyramid& pyr) {
  std::filesystem::create_directories(dir);
  auto meta = open_out(dir / (stem + ".txt"));
  meta << "rows = " << pyr.rows() << "\ncols = " << pyr.cols() << "\noctaves =";
  for (int j : pyr.octaves) meta << ' ' << j;
  meta << "\ndomain = " << (pyr.log_domain ? "log2" : "linear") << "\nclamped = " << pyr.clamped
       << '\n';
  for (std::size_t i = 0; i < pyr.octaves.size(); ++i) {
    write_grid(dir / (stem + "_j" + std::to_string(pyr.octaves[i]) + ".f64"), pyr.fields[i]);
  }
}

void write_mask_pgm(const std::filesystem::path& path, const LabelMap& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.cols << ' ' << mask.rows << "\n255\n";
  std::vector<char> bytes(mask.labels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<char>(mask.labels[i] ? 255 : 0);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_mask_raw(const std::filesystem::path& path, const LabelMap& mask) {
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(mask.labels.data()),
            static_cast<std::streamsize>(mask.labels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ScalarField read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw IoError(path.string() + ": not a PGM file");
  std::size_t cols = 0, rows = 0;
  long maxval = 0;
  try {
    cols = std::stoul(pgm_token(in));
    rows = std::stoul(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (rows == 0 || cols == 0 || maxval <= 0 || maxval > 65535) {
    throw IoError(path.string() + ": unsupported PGM dimensions or maxval");
  }
  ScalarField img(rows, cols);
  if (magic == "P2") {
    for (auto& v : img.values()) {
      long p;
      if (!(in >> p)) throw IoError(path.string() + ": truncated PGM");
      v = static_cast<double>(p);
    }
    return img;
  }
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> bytes(img.size() * bpp);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + ": truncated PGM");
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    // 16-bit PGM samples are big-endian.
    img[i] = bpp == 1 ? bytes[i] : static_cast<double>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
  }
  return img;
}

LabelMap read_mask_pgm(const std::filesystem::path& path) {
  const ScalarField img = read_pgm(path);
  double hi = 0.0;
  for (double v : img.values()) hi = std::max(hi, v);
  LabelMap mask(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) mask.labels[i] = img[i] > 0.5 * hi && hi > 0 ? 1 : 0;
  return mask;
}

ScalarField read_image(const std::filesystem::path& path) {
  char magic[5] = {};
  {
    auto in = open_in(path);
    in.read(magic, 5);
  }
  if (std::memcmp(magic, "FSEG1", 5) == 0) return read_grid(path);
  return read_pgm(path);
}

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace) {
  auto out = open_out(path);
  out.precision(17);
  out << "iter,objective,gap,gap_normalized,seconds\n";
  for (const auto& c : trace.checkpoints) {
    out << c.iteration << ',' << c.objective << ',' << c.gap << ',' << c.gap_normalized << ','
        << c.seconds << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

KeyValues parse_config(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fracseg::io
