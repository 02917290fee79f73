"""Grid-based continuous-time state estimation (point-mass filters)"""
from dotenv import load_dotenv

# Load environment variables FIRST, before anything else imports
load_dotenv()

__version__ = "1.0.0"
