#pragma once
#include <string>
#include <vector>

#include "compressor.hpp"
#include "diffusion.hpp"
#include "vae.hpp"

namespace topicdiff {

// Single-file binary checkpoint: magic, version, model kind, a JSON config
// snapshot sufficient to rebuild the topology, then named float32 arrays.
// No timestamps or host details, so identical runs write identical bytes.
struct NamedArray {
    std::string name;
    std::vector<uint64_t> dims;
    std::vector<float> data;

    size_t numel() const;
};

struct Checkpoint {
    std::string kind; // "vae" | "compressor" | "diffusor"
    std::string config_json;
    std::vector<NamedArray> arrays;

    const NamedArray& find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// kind-specific packing; epochs_done and seed ride along for warm restarts
Checkpoint pack_vae(const TopicVae& m, size_t epochs_done, uint64_t seed);
TopicVae unpack_vae(const Checkpoint& c, size_t* epochs_done = nullptr,
                    uint64_t* seed = nullptr);

Checkpoint pack_diffusor(const Diffusor& m, const EmbeddingNormalizer& norm,
                         const NoiseSchedule& sched, size_t epochs_done, uint64_t seed);
Diffusor unpack_diffusor(const Checkpoint& c, EmbeddingNormalizer* norm, NoiseSchedule* sched,
                         size_t* epochs_done = nullptr, uint64_t* seed = nullptr);

Checkpoint pack_compressor(const CompressorModel& m, size_t epochs_done, uint64_t seed);
CompressorModel unpack_compressor(const Checkpoint& c, size_t* epochs_done = nullptr,
                                  uint64_t* seed = nullptr);

} // namespace topicdiff
