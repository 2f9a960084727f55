#pragma once
// Training configuration: flat key = value document, UTF-8, '#' comments.
// Unknown keys are hard errors, unset keys take the defaults below.

#include <string>
#include <vector>

namespace uslab {

enum class Preset { kCut, kCutS, kCutSC, kConPres };

const char* preset_name(Preset p);
Preset preset_from_string(const std::string& s);  // case-insensitive

enum class NceReduction { kMean, kSum };

struct TrainConfig {
    Preset preset = Preset::kConPres;
    double lambda_cls_r = 0.1;
    double lambda_cls_f = 0.1;
    double lambda_reg = 1.0;
    double lambda_cyc = 10.0;
    double tau = 0.07;
    std::vector<std::string> nce_layers = {"input", "conv1", "conv2",
                                           "res1",  "res2",  "res3"};
    // Per-location reduction of the patch contrastive term inside the total
    // objective; "mean" keeps the loss terms on comparable scales.
    NceReduction nce_reduction = NceReduction::kMean;
    int patches_per_layer = 256;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double weight_decay = 1e-4;
    double grad_clip_norm = 10.0;
    int steps = 2000;
    int epochs = 0;  // optional alternative budget; 0 = use steps
    int batch_size = 1;
    uint64_t seed = 1;
    int checkpoint_every = 500;
    int preview_every = 500;

    void validate() const;  // throws on invariant violations
};

TrainConfig load_config(const std::string& path);
TrainConfig parse_config(const std::string& text);
// Applies one "key=value" override.
void apply_override(TrainConfig& cfg, const std::string& kv);
std::string serialize_config(const TrainConfig& cfg);

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace uslab
