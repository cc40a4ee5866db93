"""
Evaluation protocols: goal reaching, layout generalization, chase, plan-time
benchmark, Welch's t-test and metric files.
"""
