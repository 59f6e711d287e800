#ifndef GAPFM_IO_HPP_
#define GAPFM_IO_HPP_

#include <string>
#include <vector>

#include "gapfm/core.hpp"

namespace gapfm {

/// Dataset plus the external-id remap tables built at ingestion. Dense
/// indices are assigned in order of first appearance.
struct IngestResult {
  GradedDataset dataset;
  std::vector<std::string> user_ids;  // dense user index -> external id
  std::vector<std::string> item_ids;  // dense item index -> external id
  std::int64_t duplicates = 0;        // overwritten (user, item) pairs
};

/// Parses the MovieLens 100K u.data layout:
/// user<TAB>item<TAB>rating<TAB>timestamp, ratings 1..5.
IngestResult LoadMovieLens100K(const std::string& path);

/// Generic delimited (user, item, grade) triples. Duplicate pairs resolve
/// last-write-wins and are counted in the result.
IngestResult LoadCsvTriples(const std::string& path, char delimiter = ',',
                            bool has_header = false);

/// Self-describing model container: versioned, checksummed, with the remap
/// tables needed to answer recommendation queries in external ids.
struct ModelArchive {
  Grade y_max = 1;
  HyperParams hyper;
  std::int32_t iterations = 0;    // epochs actually run
  double final_objective = 0.0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  ModelFactors model;
};

void SaveModel(const ModelArchive& archive, const std::string& path);
ModelArchive LoadModel(const std::string& path);

/// Human-readable dump of an archive for debugging.
std::string ExportModelText(const ModelArchive& archive);

}  // namespace gapfm

#endif  // GAPFM_IO_HPP_
