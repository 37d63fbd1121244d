#pragma once

#include "coordtune/neuralnet/activation.hpp"
#include "coordtune/neuralnet/loss.hpp"
#include "coordtune/neuralnet/network.hpp"
#include "coordtune/neuralnet/optimizer.hpp"
#include "coordtune/neuralnet/train.hpp"
