// Copyright 2026 The TaskCodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TASKCODEC_TESTS_TINY_CONFIG_H_
#define TASKCODEC_TESTS_TINY_CONFIG_H_

#include "taskcodec/experiment.h"

namespace taskcodec::testing {

// Small enough that a full two-phase run takes seconds.
inline ExperimentConfig TinyConfig() {
  ExperimentConfig c = ExperimentConfig::Default();
  c.data.size = 32;
  c.data.train_count = 16;
  c.data.val_count = 4;
  c.data.test_count = 4;
  c.data.vinfo_count = 24;
  c.model.transform.latent_channels = 8;
  c.model.transform.base_width = 4;
  c.model.entropy.latent_channels = 8;
  c.model.entropy.context_channels = 8;
  c.model.entropy.side_channels = 8;
  c.model.entropy.side_blocks = 1;
  c.model.entropy.fusion_width = 16;
  c.training.learning_rate = 1e-3;
  c.training.max_epochs = 2;
  c.training.patience = 2;
  c.training.batch_size = 8;
  c.base_lambdas = {64, 16, 4, 1};
  for (auto& s : c.secondary) s.lambdas = {16, 4, 1, 0.25};
  c.seeds = {1};
  c.match_tolerance = 1e9;
  c.vinfo.target_size = 4;
  c.vinfo.family.steps = 20;
  c.Validate();
  return c;
}

}  // namespace taskcodec::testing

#endif  // TASKCODEC_TESTS_TINY_CONFIG_H_
