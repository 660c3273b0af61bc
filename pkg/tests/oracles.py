"""Reference values evaluated independently at 30 significant digits (mpmath) and frozen."""

LOS_PROB_36M = 0.683939720585721160797761885081
LOS_PROB_100M = 0.230984749698135375425792144852
PL_LOS_D3D_50M = 68.8991652765060385469235244867  # near slope, 1.5 GHz
PL_LOS_FAR_100M = 76.3107503868270350537036908589  # d2d = d3d = 100 m, 10/1.5 m heights
PL_NLOS_100M = 100.678372735447717267912664542
BREAKPOINT_M = 90.0
SINR_T_256B_10MHZ_1MS = 0.0179029380160141394011688649619
NOISE_50MHZ_W = 1.58113883008418966599944677222e-12  # -174 dBm/Hz + 9 dB over 50 MHz
EXP_MINUS_3 = 0.0497870683678639429793424156501
