#pragma once

#include "emolat/core/adam.hpp"
#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/core/tape.hpp"
#include "emolat/data/corpus_io.hpp"
#include "emolat/data/feature_matrix.hpp"
#include "emolat/data/folds.hpp"
#include "emolat/data/preprocess.hpp"
#include "emolat/data/synthetic.hpp"
#include "emolat/eval/bhattacharyya.hpp"
#include "emolat/eval/kde.hpp"
#include "emolat/eval/metrics.hpp"
#include "emolat/eval/svm.hpp"
#include "emolat/harness/experiment.hpp"
#include "emolat/harness/experiment_config.hpp"
#include "emolat/harness/report.hpp"
#include "emolat/harness/scatter.hpp"
#include "emolat/models/checkpoint.hpp"
#include "emolat/models/config.hpp"
#include "emolat/models/losses.hpp"
#include "emolat/models/network.hpp"
#include "emolat/models/schedule.hpp"
#include "emolat/models/trainer.hpp"
