#pragma once

#include "seatrot/pose_model.hpp"
#include "seatrot/pose_pipeline.hpp"
#include "seatrot/kinematics.hpp"
#include "seatrot/exercise_fsm.hpp"
#include "seatrot/scoring.hpp"
#include "seatrot/wire_protocol.hpp"
#include "seatrot/session_log.hpp"
#include "seatrot/synth_replay.hpp"
#include "seatrot/latency.hpp"
#include "seatrot/session.hpp"
#include "seatrot/net.hpp"
#include "seatrot/service.hpp"
