#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnmf/matrix.hpp"

namespace cnmf {

// Dense CSV: comma-separated values, one matrix row per line. Negative
// entries are rejected (factorization input precondition).
DenseMatrix load_dense_csv(const std::string& path, bool has_header = false);
void save_dense_csv(const DenseMatrix& m, const std::string& path);

// Reads every *.pgm file in the directory (lexicographic order) and flattens
// each image to one row, rescaled from [0, maxval] to [0, 1]. Both ASCII (P2)
// and binary (P5) variants are accepted, maxval up to 255.
DenseMatrix load_pgm_directory(const std::string& path);

// Matrix Market coordinate format, real general, 1-based indices. Duplicate
// coordinates are summed; explicit zeros are dropped; negative values are
// rejected on load.
SparseMatrix load_matrix_market(const std::string& path);
void save_matrix_market(const SparseMatrix& m, const std::string& path);

// One raw document per element; loaders below fill it from disk.
std::vector<std::string> load_corpus_lines(const std::string& path);
std::vector<std::string> load_corpus_directory(const std::string& path);

struct TermMatrix {
  SparseMatrix counts;                  // docs x vocabulary
  std::vector<std::string> vocabulary;  // most frequent first
};

// Builds a document/term count matrix over the vocab_size most frequent
// tokens of the first max_docs documents (whitespace tokens, lowercased,
// frequency ties broken lexicographically).
TermMatrix build_term_frequency(const std::vector<std::string>& documents,
                                std::size_t vocab_size, std::size_t max_docs);

struct SyntheticSpec {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t true_rank = 1;
  double decay_p = 0.0;       // singular value j gets weight j^(-decay_p)
  double noise_level = 0.0;   // stddev of additive gaussian noise
  std::uint64_t seed = 1;
};

// The singular values j^(-decay_p) for j = 1..true_rank.
std::vector<double> synthetic_spectrum(std::size_t true_rank, double decay_p);

// Non-negative test matrix with a controlled spectrum: U diag(s) V^T from
// seeded gaussian QR factors. Noiseless output is shifted up by its minimum
// so the non-negativity clamp never distorts the spectrum; noisy output is
// clamped directly.
DenseMatrix generate_synthetic(const SyntheticSpec& spec);

enum class DatasetFormat { dense_csv, matrix_market, pgm_dir, corpus, synthetic };

// Everything needed to materialize one input matrix, from disk or generator.
struct DatasetDescriptor {
  std::string name;
  DatasetFormat format = DatasetFormat::dense_csv;
  std::string path;
  bool csv_header = false;
  bool corpus_per_line = true;  // else one document per file
  std::size_t vocab_size = 1000;
  std::size_t max_docs = 5000;
  SyntheticSpec synthetic;
};

// Exactly one of the two members is populated, per is_sparse.
struct Dataset {
  bool is_sparse = false;
  DenseMatrix dense;
  SparseMatrix sparse;
};

Dataset load_dataset(const DatasetDescriptor& descriptor);

// Generic CSV table reader used by tests and tooling to re-parse emitted
// artifacts: returns rows of string cells, honoring an optional header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::string& path, bool has_header);

}  // namespace cnmf
