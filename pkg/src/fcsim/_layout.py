"""Flat array layouts shared by the compiled kernel and its Python fallback.

The compiled kernel (``_kernel.pyx``) hard-codes the same indices; the
backend parity tests catch any drift between the two.
"""

# plant / controller parameter vector
P_VPK = 0          # secondary phase-to-neutral peak voltage [V]
P_OMEGA = 1        # grid angular frequency [rad/s]
P_PHI = 2          # grid phase offset [rad]
P_L = 3            # merged boost + leakage inductance per phase [H]
P_R = 4            # merged series resistance per phase [ohm]
P_C1 = 5
P_C2 = 6
P_LF = 7
P_RLF = 8
P_CF = 9
P_LOAD_KIND = 10   # 0 resistive, 1 constant power, 2 battery
P_LOAD_A = 11      # r | p | capacity [kWh]
P_LOAD_B = 12      # -  | v_min | v_ocv_min
P_LOAD_C = 13      # v_ocv_max
P_LOAD_D = 14      # r_internal
P_LOAD_E = 15      # max_power [W]
P_VREF = 16
P_KPV = 17
P_KIV = 18
P_IMAX = 19
P_BAND = 20
P_KBAL = 21
P_FCAR = 22
P_KPI = 23
P_ZBAND = 24
P_DT = 25
N_PARAMS = 26

LOAD_RESISTIVE = 0
LOAD_CONSTANT_POWER = 1
LOAD_BATTERY = 2

MODE_HYSTERESIS = 0
MODE_SPWM = 1
MODE_AVERAGED = 2

METHOD_RK4 = 0
METHOD_EULER = 1

# state vector
STATE_NAMES = ("i_a", "i_b", "i_c", "v_c1", "v_c2", "i_f", "v_out", "soc")
STATE_UNITS = ("A", "A", "A", "V", "V", "A", "V", "1")
N_STATES = len(STATE_NAMES)

# controller memory: integrator, three gate flags
N_CTRL = 4

# recorded channels, in waveform CSV column order
CHANNELS = (
    "t",
    "v_src_a", "v_src_b", "v_src_c",
    "i_ph_a", "i_ph_b", "i_ph_c",
    "v_c1", "v_c2", "v_out",
    "i_f", "i_load",
    "p_src", "p_out",
)
UNITS = ("s", "V", "V", "V", "A", "A", "A", "V", "V", "V", "A", "A", "W", "W")
N_CHANNELS = len(CHANNELS)

# info vector returned by the kernels
INFO_STATUS = 0       # 0 ok, 1 non-finite state
INFO_STEPS = 1        # accepted steps
INFO_RECORDS = 2      # recorded rows
INFO_CP_CLAMPS = 3    # steps with constant-power load below v_min
INFO_SWITCHES = 4     # gate transitions
INFO_BAD_INDEX = 5    # first non-finite state index, -1 if none
N_INFO = 6
