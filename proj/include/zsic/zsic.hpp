#pragma once

#include "zsic/ablations.hpp"
#include "zsic/errors.hpp"

#include "zsic/numerics/adam.hpp"
#include "zsic/numerics/checkpoint.hpp"
#include "zsic/numerics/functions.hpp"
#include "zsic/numerics/linalg.hpp"
#include "zsic/numerics/lstm.hpp"
#include "zsic/numerics/matrix.hpp"
#include "zsic/numerics/param_store.hpp"
#include "zsic/numerics/tape.hpp"

#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/data/split.hpp"
#include "zsic/data/unigram.hpp"

#include "zsic/attention/encoder.hpp"
#include "zsic/attention/importance.hpp"

#include "zsic/metalearn/model.hpp"
#include "zsic/metalearn/predict.hpp"
#include "zsic/metalearn/projection.hpp"
#include "zsic/metalearn/trainer.hpp"

#include "zsic/harness/config.hpp"
#include "zsic/harness/experiment.hpp"
#include "zsic/harness/gradcheck.hpp"
#include "zsic/harness/metrics.hpp"
#include "zsic/harness/report.hpp"
#include "zsic/harness/synth.hpp"
