#include "actlumos/fusion/fusion.hpp"

namespace actlumos::fusion {

void validate_head_config(const TemporalHeadConfig& cfg) {
  if (cfg.model_dim < 1 || cfg.num_layers < 1 || cfg.num_heads < 1 || cfg.ff_mult < 1 || cfg.num_classes < 1 ||
      cfg.seq_len < 1)
    throw Error("temporal head config fields must be positive");
  if (cfg.model_dim % cfg.num_heads != 0)
    throw Error("num_heads (" + std::to_string(cfg.num_heads) + ") must divide model_dim (" +
                std::to_string(cfg.model_dim) + ")");
}

}  // namespace actlumos::fusion
