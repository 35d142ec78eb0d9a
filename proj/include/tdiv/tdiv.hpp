#pragma once

#include "tdiv/artifact_synth.hpp"
#include "tdiv/error.hpp"
#include "tdiv/frame.hpp"
#include "tdiv/frame_metrics.hpp"
#include "tdiv/mdp.hpp"
#include "tdiv/preprocess.hpp"
#include "tdiv/report_io.hpp"
#include "tdiv/tcn.hpp"
#include "tdiv/tcn_io.hpp"
#include "tdiv/temporal_diversity.hpp"
#include "tdiv/video_io.hpp"
