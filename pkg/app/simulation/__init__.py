from app.simulation.simulator import SequenceSimulator, ShotOutcomes
