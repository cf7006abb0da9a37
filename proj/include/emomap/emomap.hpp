#pragma once

#include "emomap/audit.hpp"
#include "emomap/brainmap.hpp"
#include "emomap/classifiers.hpp"
#include "emomap/cnn/adam.hpp"
#include "emomap/cnn/checkpoint.hpp"
#include "emomap/cnn/layers.hpp"
#include "emomap/cnn/network.hpp"
#include "emomap/cnn/tensor.hpp"
#include "emomap/cnn/train.hpp"
#include "emomap/container.hpp"
#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/fft.hpp"
#include "emomap/matrix.hpp"
#include "emomap/npy.hpp"
#include "emomap/numeric.hpp"
#include "emomap/preprocess.hpp"
#include "emomap/rng.hpp"
#include "emomap/similarity.hpp"
