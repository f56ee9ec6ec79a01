#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csod/tensor.hpp"

namespace csod {

// One synthetic example: textured background, 1-3 colored shapes, the exact
// shape raster as mask, and the mask's morphological boundary as edge target.
struct SampleRecord {
    Tensor image;  // (1,3,size,size) in [0,1]
    Tensor mask;   // (1,1,size,size) in {0,1}
    Tensor edge;   // (1,1,size,size) in {0,1}
    std::int64_t id{0};
    std::uint64_t seed{0};
};

SampleRecord generate_sample(std::uint64_t seed, int size);

// dilate(mask,3x3) - erode(mask,3x3) with replicate-edge border handling
Tensor edge_from_mask(const Tensor& mask);

// Binary netpbm: single-channel tensors as P5, 3-channel as P6, maxval 255.
// Quantization: byte = round(v*255); reading maps byte -> byte/255.
void write_image(const std::string& path, const Tensor& t);
Tensor read_image(const std::string& path);

struct DatasetManifest {
    enum class Split { train, test };
    struct Entry {
        std::int64_t id;
        std::string img;
        std::string msk;
        std::string edg;
    };

    std::string root;
    int size{0};
    Split split{Split::train};
    std::vector<Entry> entries;

    std::int64_t count() const { return static_cast<std::int64_t>(entries.size()); }
};

const char* split_name(DatasetManifest::Split s);

struct GeneratedDataset {
    DatasetManifest train;
    DatasetManifest test;
};

// Writes img_<id>.ppm / msk_<id>.pgm / edg_<id>.pgm triplets plus
// manifest_train.txt and manifest_test.txt under root. Train ids come first,
// test ids follow, so the id sets are disjoint. Deterministic given the seed.
GeneratedDataset generate_dataset(std::uint64_t seed, int size, int train_count, int test_count,
                                  const std::string& root);

DatasetManifest load_manifest(const std::string& root, DatasetManifest::Split split);
SampleRecord load_sample(const DatasetManifest& manifest, const DatasetManifest::Entry& entry);
std::vector<SampleRecord> load_split(const DatasetManifest& manifest);

}  // namespace csod
