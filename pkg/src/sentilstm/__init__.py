"""News-sentiment fused stock price forecasting with from-scratch LSTM/DNN regressors."""

__version__ = "0.1.0"
