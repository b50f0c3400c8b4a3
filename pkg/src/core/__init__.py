# Estimators, simulators, Monte Carlo harness and empirical statistics
