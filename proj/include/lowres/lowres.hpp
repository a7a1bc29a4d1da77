#pragma once

// Umbrella header for the lowres library.

#include "lowres/adam.hpp"
#include "lowres/augment.hpp"
#include "lowres/batches.hpp"
#include "lowres/bicubic.hpp"
#include "lowres/checkpoint.hpp"
#include "lowres/classifier.hpp"
#include "lowres/cls_train.hpp"
#include "lowres/common.hpp"
#include "lowres/conv.hpp"
#include "lowres/dcscn.hpp"
#include "lowres/depth_frame.hpp"
#include "lowres/graph.hpp"
#include "lowres/image_io.hpp"
#include "lowres/loss.hpp"
#include "lowres/manifest.hpp"
#include "lowres/metrics.hpp"
#include "lowres/norm.hpp"
#include "lowres/ops.hpp"
#include "lowres/pipeline.hpp"
#include "lowres/resample_core.hpp"
#include "lowres/rng.hpp"
#include "lowres/sr_train.hpp"
#include "lowres/synth.hpp"
#include "lowres/synth_dataset.hpp"
#include "lowres/tensor.hpp"
