#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tsal/types.hpp"

namespace tsal {

enum class Split { pool, test };

std::string_view to_string(Split s);

/// In-memory dataset. Every sample shares feature_dim; ids are unique.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, LabelSchema schema, std::size_t feature_dim);

  const std::string& name() const noexcept { return name_; }
  const LabelSchema& schema() const noexcept { return schema_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const std::vector<Split>& splits() const noexcept { return splits_; }
  std::size_t size() const noexcept { return samples_.size(); }

  /// Validates dimension, id uniqueness and truth length.
  void add(Sample sample, Split split = Split::pool);

  const Sample* find(std::string_view id) const;
  const Sample& at(std::string_view id) const;

  std::vector<Sample> subset(Split split) const;
  std::vector<std::string> ids(Split split) const;

  bool operator==(const Dataset& other) const;

 private:
  std::string name_;
  LabelSchema schema_;
  std::size_t feature_dim_ = 0;
  std::vector<Sample> samples_;
  std::vector<Split> splits_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Line-delimited JSON: a header object, then one record per line.
///   {"format":"tsal-dataset","version":1,"name":...,"feature_dim":f,"labels":[...],"exclusive_index":0}
///   {"id":"s00000","split":"pool","truth":"0100","features":[...],"image_path":"..."}
/// "truth" and "image_path" are optional; "split" defaults to "pool".
std::string dataset_to_string(const Dataset& data);
Dataset dataset_from_string(std::string_view text);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string dataset_hash(const Dataset& data);

}  // namespace tsal
