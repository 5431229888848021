"""Dickey-Fuller tau quantiles, constant-only regression.

Generated by tools/build_adf_table.py (reps=400000, seed=20240501).
Rows follow INV_NOBS (1/nobs, ascending; the first row is the
fitted asymptotic limit). Columns follow LEVELS.
"""

LEVELS = [0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.925, 0.95, 0.975, 0.99, 0.995, 0.999]

NOBS = [None, 2500, 1000, 500, 250, 100, 50, 25]

INV_NOBS = [0.0, 0.0004, 0.001, 0.002, 0.004, 0.01, 0.02, 0.04]

QUANTILES = [
    [-4.08684, -3.84037, -3.63987, -3.42555, -3.11849, -2.86004, -2.69407, -2.56784, -2.46272, -2.37149, -2.21891, -2.08784, -1.96985, -1.86269, -1.76106, -1.66290, -1.56629, -1.46784, -1.36641, -1.25962, -1.14441, -1.01460, -0.86212, -0.67598, -0.43537, -0.27864, -0.07466, 0.23997, 0.61073, 0.86258, 1.38138],
    [-4.08925, -3.84110, -3.64200, -3.43028, -3.12094, -2.86514, -2.69762, -2.57040, -2.46420, -2.37270, -2.22092, -2.08893, -1.97053, -1.86380, -1.76139, -1.66374, -1.56686, -1.46865, -1.36732, -1.26051, -1.14508, -1.01434, -0.86143, -0.67478, -0.43418, -0.27808, -0.07269, 0.24480, 0.61643, 0.86566, 1.38369],
    [-4.09252, -3.84985, -3.65309, -3.43567, -3.12745, -2.86432, -2.69676, -2.56882, -2.46436, -2.37264, -2.21826, -2.08785, -1.96995, -1.86171, -1.75950, -1.66140, -1.56484, -1.46618, -1.36472, -1.25714, -1.14178, -1.01262, -0.86165, -0.67608, -0.43438, -0.27789, -0.07365, 0.23876, 0.61144, 0.87121, 1.38373],
    [-4.11767, -3.86580, -3.64863, -3.43546, -3.12615, -2.86304, -2.69535, -2.56864, -2.46343, -2.37201, -2.21778, -2.08631, -1.96900, -1.86141, -1.76132, -1.66228, -1.56493, -1.46699, -1.36568, -1.25903, -1.14329, -1.01363, -0.85963, -0.67416, -0.43329, -0.27785, -0.07617, 0.23846, 0.60333, 0.84887, 1.37990],
    [-4.14679, -3.87670, -3.67073, -3.45293, -3.13856, -2.87206, -2.70383, -2.57539, -2.46693, -2.37594, -2.22041, -2.08842, -1.97102, -1.86264, -1.75973, -1.66044, -1.56385, -1.46617, -1.36561, -1.25964, -1.14368, -1.01318, -0.86194, -0.67679, -0.43522, -0.27673, -0.07459, 0.24079, 0.61807, 0.87407, 1.38949],
    [-4.21106, -3.94334, -3.72197, -3.49923, -3.17094, -2.89560, -2.71869, -2.58457, -2.47532, -2.38131, -2.22269, -2.08906, -1.97057, -1.86101, -1.75775, -1.65865, -1.56028, -1.46214, -1.36085, -1.25276, -1.13592, -1.00476, -0.85204, -0.66643, -0.42425, -0.26947, -0.06507, 0.25270, 0.62605, 0.88126, 1.40846],
    [-4.35952, -4.06243, -3.81864, -3.56565, -3.21012, -2.91914, -2.73862, -2.60184, -2.48719, -2.38953, -2.22752, -2.09093, -1.96953, -1.85895, -1.75469, -1.65334, -1.55439, -1.45325, -1.35021, -1.24130, -1.12501, -0.99255, -0.83775, -0.64976, -0.41189, -0.25341, -0.04726, 0.27246, 0.65408, 0.91315, 1.46443],
    [-4.71509, -4.33033, -4.03535, -3.73860, -3.32146, -2.98794, -2.78549, -2.63420, -2.51169, -2.40799, -2.23448, -2.08969, -1.96377, -1.84835, -1.74009, -1.63542, -1.53285, -1.43019, -1.32441, -1.21262, -1.09436, -0.96026, -0.80473, -0.61414, -0.36660, -0.20586, 0.00458, 0.32547, 0.71359, 0.99639, 1.56968],
]
