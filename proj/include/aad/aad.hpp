// Copyright 2026 The AAD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "aad/audio_io.hpp"
#include "aad/calibration.hpp"
#include "aad/common.hpp"
#include "aad/config.hpp"
#include "aad/detector.hpp"
#include "aad/detector_api.hpp"
#include "aad/features.hpp"
#include "aad/fft.hpp"
#include "aad/frame_io.hpp"
#include "aad/kmeans.hpp"
#include "aad/lstm_ae.hpp"
#include "aad/manifest.hpp"
#include "aad/metrics.hpp"
#include "aad/noise_gate.hpp"
#include "aad/ocsvm.hpp"
#include "aad/pipeline.hpp"
#include "aad/synthgen.hpp"
