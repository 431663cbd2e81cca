#include "cnmf/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "cnmf/errors.hpp"
#include "cnmf/qr.hpp"
#include "cnmf/rng.hpp"

namespace cnmf {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void strip_carriage_return(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

// Shortest decimal form that reparses to the identical double.
std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_value(const std::string& token, const std::string& where) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError(where + ": cannot parse '" + token + "' as a number");
  return v;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

DenseMatrix load_dense_csv(const std::string& path, bool has_header) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  if (has_header && std::getline(in, line)) ++line_no;

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_carriage_return(line);
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cols == 0) cols = cells.size();
    const std::string where = path + ": line " + std::to_string(line_no);
    if (cells.size() != cols)
      throw ParseError(where + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(cells.size()));
    for (const std::string& cell : cells) {
      const double v = parse_value(cell, where);
      if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
      if (v < 0.0) throw InputError(where + ": negative value " + cell);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(path + ": no data rows");
  DenseMatrix m(rows, cols);
  m.values = std::move(values);
  return m;
}

void save_dense_csv(const DenseMatrix& m, const std::string& path) {
  std::ofstream out = open_output(path);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << format_value(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

namespace {

// Next whitespace-delimited PGM header token; '#' starts a comment running to
// the end of the line.
std::string next_pgm_token(std::istream& in) {
  std::string token;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#' || (c != EOF && std::isspace(c))) in.unget();
  return token;
}

std::size_t parse_pgm_count(std::istream& in, const std::string& where,
                            const char* what) {
  const std::string token = next_pgm_token(in);
  if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(where + ": malformed " + what);
  return static_cast<std::size_t>(std::strtoull(token.c_str(), nullptr, 10));
}

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // rescaled to [0, 1], image rows concatenated
};

PgmImage load_pgm(const std::string& path) {
  std::ifstream in = open_input(path, true);
  const std::string magic = next_pgm_token(in);
  if (magic != "P2" && magic != "P5")
    throw ParseError(path + ": not a PGM file (magic '" + magic + "')");

  PgmImage img;
  img.width = parse_pgm_count(in, path, "width");
  img.height = parse_pgm_count(in, path, "height");
  const std::size_t maxval = parse_pgm_count(in, path, "maxval");
  if (img.width == 0 || img.height == 0)
    throw ParseError(path + ": zero image dimension");
  if (maxval == 0 || maxval > 255)
    throw ParseError(path + ": maxval " + std::to_string(maxval) +
                     " outside supported range 1..255");

  const std::size_t count = img.width * img.height;
  img.pixels.resize(count);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P5") {
    in.get();  // single whitespace byte separating header and raster
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw ParseError(path + ": truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      if (raw[i] > maxval)
        throw ParseError(path + ": pixel value exceeds maxval");
      img.pixels[i] = raw[i] * scale;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::string token = next_pgm_token(in);
      if (token.empty()) throw ParseError(path + ": truncated raster");
      if (token[0] == '-') throw InputError(path + ": negative pixel value");
      if (token.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(path + ": malformed pixel '" + token + "'");
      const std::size_t v = std::strtoull(token.c_str(), nullptr, 10);
      if (v > maxval) throw ParseError(path + ": pixel value exceeds maxval");
      img.pixels[i] = v * scale;
    }
  }
  return img;
}

}  // namespace

DenseMatrix load_pgm_directory(const std::string& path) {
  if (!fs::is_directory(path)) throw IoError(path + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .pgm files in " + path);

  DenseMatrix m;
  for (std::size_t r = 0; r < files.size(); ++r) {
    const PgmImage img = load_pgm(files[r].string());
    if (r == 0) {
      m = DenseMatrix(files.size(), img.width * img.height);
    } else if (img.pixels.size() != m.cols) {
      throw ParseError(files[r].string() + ": image dimensions differ from " +
                       files[0].string());
    }
    std::copy(img.pixels.begin(), img.pixels.end(), m.row(r));
  }
  return m;
}

SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": line 1: missing banner");
  strip_carriage_return(line);
  {
    std::istringstream banner(line);
    std::string tag, object, layout, field, symmetry, extra;
    banner >> tag >> object >> layout >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix" || layout != "coordinate" ||
        (field != "real" && field != "integer") || symmetry != "general" ||
        (banner >> extra))
      throw ParseError(path +
                       ": line 1: expected banner '%%MatrixMarket matrix "
                       "coordinate real general'");
  }

  std::size_t line_no = 1;
  for (;;) {
    if (!std::getline(in, line))
      throw ParseError(path + ": missing size line");
    ++line_no;
    strip_carriage_return(line);
    if (!blank(line) && line[line.find_first_not_of(" \t")] != '%') break;
  }

  std::size_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> entries))
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": malformed size line");
    if (rows == 0 || cols == 0)
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": zero matrix dimension");
  }

  std::vector<Triplet> triplets;
  triplets.reserve(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    if (!std::getline(in, line))
      throw ParseError(path + ": unexpected end of file after " +
                       std::to_string(e) + " of " + std::to_string(entries) +
                       " entries");
    ++line_no;
    strip_carriage_return(line);
    const std::string where = path + ": line " + std::to_string(line_no);
    std::istringstream entry(line);
    std::size_t i = 0, j = 0;
    std::string value_token;
    if (!(entry >> i >> j >> value_token))
      throw ParseError(where + ": malformed entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(where + ": index out of range");
    const double v = parse_value(value_token, where);
    if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
    if (v < 0.0) throw InputError(where + ": negative value " + value_token);
    triplets.push_back({i - 1, j - 1, v});
  }
  return sparse_from_triplets(rows, cols, std::move(triplets));
}

void save_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows << ' ' << m.cols << ' ' << m.nnz() << '\n';
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p)
      out << (i + 1) << ' ' << (m.col_indices[p] + 1) << ' '
          << format_value(m.values[p]) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::vector<std::string> load_corpus_lines(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::string> documents;
  std::string line;
  while (std::getline(in, line)) {
    strip_carriage_return(line);
    documents.push_back(line);
  }
  return documents;
}

std::vector<std::string> load_corpus_directory(const std::string& path) {
  if (!fs::is_directory(path)) throw IoError(path + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> documents;
  documents.reserve(files.size());
  for (const fs::path& file : files) {
    std::ifstream in = open_input(file.string());
    std::ostringstream content;
    content << in.rdbuf();
    documents.push_back(content.str());
  }
  return documents;
}

TermMatrix build_term_frequency(const std::vector<std::string>& documents,
                                std::size_t vocab_size, std::size_t max_docs) {
  const std::size_t docs_used = std::min(documents.size(), max_docs);
  if (docs_used == 0) throw InputError("term frequency needs at least one document");
  if (vocab_size == 0) throw InputError("vocab_size must be positive");

  std::vector<std::vector<std::string>> tokenized(docs_used);
  // std::map iterates lexicographically, so the stable sort below breaks
  // frequency ties in favor of the lexicographically smaller token.
  std::map<std::string, std::size_t> counts;
  for (std::size_t r = 0; r < docs_used; ++r) {
    std::istringstream words(documents[r]);
    std::string word;
    while (words >> word) {
      std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
      ++counts[word];
      tokenized[r].push_back(word);
    }
  }
  if (counts.empty()) throw InputError("documents contain no tokens");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > vocab_size) ranked.resize(vocab_size);

  TermMatrix result;
  std::map<std::string, std::size_t> vocabulary_index;
  for (std::size_t c = 0; c < ranked.size(); ++c) {
    result.vocabulary.push_back(ranked[c].first);
    vocabulary_index[ranked[c].first] = c;
  }

  std::vector<Triplet> occurrences;
  for (std::size_t r = 0; r < docs_used; ++r)
    for (const std::string& word : tokenized[r]) {
      const auto it = vocabulary_index.find(word);
      if (it != vocabulary_index.end()) occurrences.push_back({r, it->second, 1.0});
    }
  result.counts =
      sparse_from_triplets(docs_used, result.vocabulary.size(), std::move(occurrences));
  return result;
}

std::vector<double> synthetic_spectrum(std::size_t true_rank, double decay_p) {
  std::vector<double> spectrum(true_rank);
  for (std::size_t j = 0; j < true_rank; ++j)
    spectrum[j] = std::pow(static_cast<double>(j + 1), -decay_p);
  return spectrum;
}

DenseMatrix generate_synthetic(const SyntheticSpec& spec) {
  if (spec.d == 0 || spec.n == 0)
    throw ConfigError("synthetic dimensions must be positive");
  if (spec.true_rank == 0 || spec.true_rank > std::min(spec.d, spec.n))
    throw ConfigError("true_rank must satisfy 1 <= true_rank <= min(d, n)");
  if (!(spec.decay_p >= 0.0) || !(spec.noise_level >= 0.0))
    throw ConfigError("decay_p and noise_level must be non-negative");

  Rng rng(spec.seed);
  DenseMatrix u_raw(spec.d, spec.true_rank);
  for (double& v : u_raw.values) v = rng.normal();
  DenseMatrix v_raw(spec.n, spec.true_rank);
  for (double& v : v_raw.values) v = rng.normal();
  const DenseMatrix u = thin_qr(u_raw).q;
  const DenseMatrix v = thin_qr(v_raw).q;

  const std::vector<double> spectrum = synthetic_spectrum(spec.true_rank, spec.decay_p);
  DenseMatrix scaled = u;
  for (std::size_t i = 0; i < scaled.rows; ++i)
    for (std::size_t j = 0; j < scaled.cols; ++j) scaled(i, j) *= spectrum[j];
  DenseMatrix x = matmul(scaled, v, false, true);

  if (spec.noise_level > 0.0) {
    for (double& entry : x.values) entry += spec.noise_level * rng.normal();
  } else {
    // Shifting by the minimum keeps the clamp below a no-op, so the
    // constructed spectrum survives untouched apart from the rank-one shift.
    const double lowest = *std::min_element(x.values.begin(), x.values.end());
    if (lowest < 0.0)
      for (double& entry : x.values) entry -= lowest;
  }
  return clamp_nonnegative(std::move(x));
}

Dataset load_dataset(const DatasetDescriptor& descriptor) {
  Dataset out;
  switch (descriptor.format) {
    case DatasetFormat::dense_csv:
      out.dense = load_dense_csv(descriptor.path, descriptor.csv_header);
      break;
    case DatasetFormat::matrix_market:
      out.is_sparse = true;
      out.sparse = load_matrix_market(descriptor.path);
      break;
    case DatasetFormat::pgm_dir:
      out.dense = load_pgm_directory(descriptor.path);
      break;
    case DatasetFormat::corpus: {
      const std::vector<std::string> documents =
          descriptor.corpus_per_line ? load_corpus_lines(descriptor.path)
                                     : load_corpus_directory(descriptor.path);
      out.is_sparse = true;
      out.sparse =
          build_term_frequency(documents, descriptor.vocab_size, descriptor.max_docs)
              .counts;
      break;
    }
    case DatasetFormat::synthetic:
      out.dense = generate_synthetic(descriptor.synthetic);
      break;
  }
  return out;
}

CsvTable read_csv_table(const std::string& path, bool has_header) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    strip_carriage_return(line);
    if (blank(line)) continue;
    if (header_pending) {
      table.header = split_cells(line);
      header_pending = false;
    } else {
      table.rows.push_back(split_cells(line));
    }
  }
  return table;
}

}  // namespace cnmf
