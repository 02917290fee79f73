import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    OUTPUT_DIR = os.getenv("PMF_OUTPUT_DIR", "results")
    LOG_LEVEL = os.getenv("PMF_LOG_LEVEL", "INFO")
    WORKERS = int(os.getenv("PMF_WORKERS", "1"))

settings = Settings()
